"""Coarse geometry of Teichmueller space: metric tools, exact torus model,
symbolic foliation calculus and extremal-length inequality checks."""
from .errors import InputError, InsufficientDeclarations
from .metric import (MetricMap, PointSequence, SampledMetricSpace, check_ac, four_point_delta,
                     gromov_product, profile, semigroup_harness)
from .models import HalfLine, HalfPlane, RootedTree, boundary_extension, classify_map
from .slopes import Slope
from .torus import (ext_length, hyp_distance, kerckhoff_distance, minsky_check, teich_ray)

__version__ = "0.1.0"

__all__ = ["InputError", "InsufficientDeclarations", "MetricMap", "PointSequence",
           "SampledMetricSpace", "check_ac", "four_point_delta", "gromov_product", "profile",
           "semigroup_harness", "HalfLine", "HalfPlane", "RootedTree", "boundary_extension",
           "classify_map", "Slope", "ext_length", "hyp_distance", "kerckhoff_distance",
           "minsky_check", "teich_ray"]
