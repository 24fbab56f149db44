"""Numerical checks of extremal-length inequalities on the torus model.

* the filling bound ``Ext(gamma) <= C_gamma max_i Ext(alpha_i)`` with the
  explicit topological constant ``C(g, n, m)``;
* subadditivity of the intersection pairing on disjoint foliations;
* extremal length of Gardiner-Masur cone points and the generalised
  Minsky inequality.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .slopes import Slope
from .torus import (X0, GMFunctional, WeightedMulticurve, as_tau, evaluate_functional,
                    ext_direction, ext_length, ext_length_array, gromov_product_t,
                    hyp_distance, inter_num, _as_direction)


def _check_signature(g, n):
    g, n = int(g), int(n)
    if g < 0 or n < 0 or 3 * g - 3 + n < 1:
        raise InputError(f"signature ({g},{n}) needs 3g-3+n >= 1")
    return g, n


def filling_constant(g: int, n: int, m: int) -> float:
    """``C(g,n,m) = 16 (m+2g+n)^2 (m + 4 (2g+n) (6g-6+n)^2)``."""
    g, n = _check_signature(g, n)
    if int(m) < 1:
        raise InputError("m must be >= 1")
    m = int(m)
    return float(16 * (m + 2 * g + n) ** 2 * (m + 4 * (2 * g + n) * (6 * g - 6 + n) ** 2))


def c_gamma(g: int, n: int, m: int, intersections: Sequence[float]) -> float:
    """``C_gamma = C(g,n,m) (sum_i i(alpha_i, gamma))^2 + 4 (6g-6+n)^2``."""
    g, n = _check_signature(g, n)
    ints = [float(v) for v in intersections]
    if len(ints) != int(m):
        raise InputError(f"expected {m} intersection numbers, got {len(ints)}")
    if any(v < 0 for v in ints):
        raise InputError("intersection numbers must be nonnegative")
    return filling_constant(g, n, m) * sum(ints) ** 2 + 4.0 * (6 * g - 6 + n) ** 2


@dataclass
class FillingInstance:
    """Filling system ``alphas`` and target ``gamma`` (``None``: random per trial)."""

    alphas: tuple
    gamma: Slope | None = None
    signature: tuple = (1, 1)
    gamma_height: int = 50

    def __post_init__(self):
        self.alphas = tuple(Slope.parse(a) for a in self.alphas)
        if self.gamma is not None:
            self.gamma = Slope.parse(self.gamma)
        self.signature = tuple(int(v) for v in self.signature)
        if self.signature != (1, 1):
            raise InputError("numeric verification is available on the torus (1,1) only")
        if len(self.alphas) < 2:
            raise InputError("a filling system needs m >= 2 curves")
        for a, b in itertools.combinations(self.alphas, 2):
            if inter_num(a, b) == 0:
                raise InputError(f"curves {a} and {b} are disjoint, so the system does not fill")


@dataclass
class FillsReport:
    max_ratio: float
    passed: bool
    trials: int
    rows: list = field(default_factory=list, repr=False)


def random_taus(rng: np.random.Generator, k: int) -> np.ndarray:
    """Points ``x + i exp(u)`` with ``x ~ U[-2, 2]``, ``u ~ U[-3, 3]``."""
    return rng.uniform(-2, 2, k) + 1j * np.exp(rng.uniform(-3, 3, k))


def random_slopes(rng: np.random.Generator, k: int, height: int) -> list[Slope]:
    out = []
    while len(out) < k:
        p, q = (int(v) for v in rng.integers(-height, height + 1, 2))
        if math.gcd(p, q) == 1:
            out.append(Slope.of(p, q))
    return out


def verify_fills_bound(instance: FillingInstance, trials: int, seed: int) -> FillsReport:
    """Ratios ``Ext(gamma) / (C_gamma max_i Ext(alpha_i))`` at seeded random points."""
    if int(trials) < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    taus = random_taus(rng, trials)
    gammas = ([instance.gamma] * trials if instance.gamma is not None
              else random_slopes(rng, trials, instance.gamma_height))
    g, n = instance.signature
    m = len(instance.alphas)
    rows, worst = [], 0.0
    for tau, gam in zip(taus, gammas):
        cg = c_gamma(g, n, m, [inter_num(a, gam) for a in instance.alphas])
        bound = cg * max(ext_length(tau, a) for a in instance.alphas)
        eg = ext_length(tau, gam)
        ratio = eg / bound
        worst = max(worst, ratio)
        rows.append({"tau_re": float(tau.real), "tau_im": float(tau.imag), "gamma": str(gam),
                     "ext_gamma": eg, "bound": bound, "ratio": ratio})
    return FillsReport(worst, worst <= 1.0, int(trials), rows)


# ---------------------------------------------------------------------------
# Subadditivity


@dataclass
class SubadditivityReport:
    lower_gaps: list
    upper_gaps: list

    @property
    def passed(self) -> bool:
        return min(self.lower_gaps) >= -1e-12 and min(self.upper_gaps) >= -1e-12


def _pair_functional_curve(y, mc: WeightedMulticurve, base=X0) -> float:
    """``i(E_y, F)`` for a weighted multicurve on one slope."""
    return sum(w * evaluate_functional("interior", y, s, base) for s, w in mc.terms)


def subadditivity_check(y_points, F: WeightedMulticurve, G: WeightedMulticurve,
                        base=X0) -> SubadditivityReport:
    """``sqrt(i(a,F)^2 + i(a,G)^2) <= i(a,F+G) <= i(a,F) + i(a,G)`` for ``a = E_y``.

    Requires ``i(F, G) = 0``; on the torus both sit on one slope.
    """
    if inter_num(F, G) != 0:
        raise InputError("subadditivity needs i(F, G) = 0")
    slopes = {s for s, _ in F.terms} | {s for s, _ in G.terms}
    if len(slopes) != 1:
        raise InputError("F and G must share one slope on the torus")
    (s,) = slopes
    FG = WeightedMulticurve.single(s, sum(w for _, w in F.terms) + sum(w for _, w in G.terms))
    lo, hi = [], []
    for y in y_points:
        f, g = _pair_functional_curve(y, F, base), _pair_functional_curve(y, G, base)
        fg = _pair_functional_curve(y, FG, base)
        lo.append(fg - math.hypot(f, g))
        hi.append(f + g - fg)
    if not lo:
        raise InputError("no sample points")
    return SubadditivityReport(lo, hi)


# ---------------------------------------------------------------------------
# Cone extremal length


def cone_ext_length(y, functional: GMFunctional, slope_set) -> float:
    """``sup_F i(a, F)^2 / Ext_y(F)`` over a finite slope set."""
    slopes = [Slope.parse(s) for s in slope_set]
    if not slopes:
        raise InputError("empty slope set")
    y = as_tau(y)
    p = np.array([s.p for s in slopes])
    q = np.array([s.q for s in slopes])
    vals = np.array([functional(s) for s in slopes])
    return float(np.max(vals ** 2 / ext_length_array(y, p, q)))


def cone_ext_length_exact(y, functional: GMFunctional) -> float:
    """Closed form: ``exp(2 d(y,z)) / K_z`` for interior ``z``,
    ``Ext_y(G) / Ext_x0(G)`` for boundary ``G``; times ``scale^2``."""
    y = as_tau(y)
    c2 = functional.scale ** 2
    if functional.kind == "interior":
        z = as_tau(functional.payload)
        return c2 * math.exp(2 * hyp_distance(y, z) - 2 * hyp_distance(functional.base, z))
    v = _as_direction(functional.payload)
    return c2 * ext_direction(y, v) / ext_direction(functional.base, v)


def cone_pairing(a: GMFunctional, b: GMFunctional) -> float:
    """Intersection pairing of two cone points on the torus model."""
    if a.base != b.base:
        raise InputError("functionals use different base points")
    base, c = a.base, a.scale * b.scale
    if a.kind == "interior" and b.kind == "interior":
        return c * math.exp(-2 * gromov_product_t(a.payload, b.payload, base))
    if a.kind == "boundary" and b.kind == "boundary":
        v, w = _as_direction(a.payload), _as_direction(b.payload)
        return c * abs(v[0] * w[1] - v[1] * w[0]) / math.sqrt(
            ext_direction(base, v) * ext_direction(base, w))
    y, v = (a.payload, b.payload) if a.kind == "interior" else (b.payload, a.payload)
    v = _as_direction(v)
    K = math.exp(2 * hyp_distance(base, y))
    return c * math.sqrt(ext_direction(y, v) / K) / math.sqrt(ext_direction(base, v))


@dataclass(frozen=True)
class GeneralizedMinsky:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def generalized_minsky(y, a: GMFunctional, b: GMFunctional) -> GeneralizedMinsky:
    """``i(a,b)^2`` against ``Ext_y(a) Ext_y(b)`` using the exact cone extremal length."""
    return GeneralizedMinsky(cone_pairing(a, b) ** 2,
                             cone_ext_length_exact(y, a) * cone_ext_length_exact(y, b))
