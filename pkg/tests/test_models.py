import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarse_teich.errors import InputError
from coarse_teich.metric import MetricMap, check_ac
from coarse_teich.models import (HalfLine, HalfPlane, RootedTree, angle_to_xi,
                                 boundary_extension, boundary_gromov_product,
                                 boundary_product_halfplane, classify_map, disk_angle,
                                 extensions_coincide, halfplane_pair_suite, mobius_boundary,
                                 mobius_inverse, mobius_map, reparameterization,
                                 tree_automorphism, tree_automorphism_inverse,
                                 tree_branch_collapse, tree_pair_suite, vertical_perturbation,
                                 visual_metric_bounds)


def hyp_arccosh(a, b):
    """Half-plane distance from the arccosh formula, halved (independent oracle)."""
    return 0.5 * math.acosh(1 + abs(a - b) ** 2 / (2 * a.imag * b.imag))


# ---------------------------------------------------------------------------
# Trees


def test_tree_points_and_lcp():
    T = RootedTree(2, 3)
    assert len(T.points) == 15
    assert T.lcp((0, 1, 1), (0, 1, 0)) == 2
    assert T.distance((0, 1, 1), (0, 1, 0)) == 2
    with pytest.raises(InputError):
        T.canonical_boundary((0, 2))


def test_tree_boundary_product_is_lcp():
    T = RootedTree(2, 10)
    p = (0, 1, 1, 0, 1) + (0,) * 5
    q = (0, 1, 1, 0, 1) + (1,) * 5
    assert boundary_gromov_product(T, p, q, 11) == 5
    assert boundary_gromov_product(T, p, p, 11) == math.inf


def test_tree_visual_metric():
    T = RootedTree(2, 8)
    p = (0, 0, 1, 0, 0, 0, 0, 0)
    q = (0, 0, 1, 1, 0, 0, 0, 0)
    assert visual_metric_bounds(T, p, q, 2.0) == (0.125, 0.125)
    assert visual_metric_bounds(T, p, p, 2.0) == (0.0, 0.0)
    with pytest.raises(InputError):
        visual_metric_bounds(T, p, q, 1.0)


@given(st.lists(st.lists(st.integers(0, 1), min_size=10, max_size=10), min_size=3, max_size=3),
       st.floats(1.1, 4.0))
@settings(max_examples=100, deadline=None)
def test_tree_visual_metric_ultrametric(words, a):
    T = RootedTree(2, 10)
    p, q, r = (tuple(w) for w in words)
    d = lambda x, y: visual_metric_bounds(T, x, y, a, horizon=11)[1]
    # delta = 0, so the visual metric is an ultrametric
    assert d(p, r) <= max(d(p, q), d(q, r)) + 1e-15


def test_tree_automorphism_inverse_roundtrip():
    T = RootedTree(3, 4)
    f, g = tree_automorphism(T, 9), tree_automorphism_inverse(T, 9)
    for w in T.points:
        assert g.func(f.func(w)) == w and f.func(g.func(w)) == w
        assert len(f.func(w)) == len(w)


# ---------------------------------------------------------------------------
# Half-plane


def test_halfplane_distance_matches_arccosh():
    rng = np.random.default_rng(0)
    H = HalfPlane()
    for _ in range(200):
        a = complex(rng.uniform(-3, 3), math.exp(rng.uniform(-2, 2)))
        b = complex(rng.uniform(-3, 3), math.exp(rng.uniform(-2, 2)))
        assert H.distance(a, b) == pytest.approx(hyp_arccosh(a, b), rel=1e-9, abs=1e-12)


def test_halfplane_ray_is_geodesic():
    H = HalfPlane()
    for xi in (0.0, -1.3, 2.5, math.inf):
        for t in (0.5, 1.0, 3.0):
            z = H.ray_point(xi, t)
            assert H.distance(H.base, z) == pytest.approx(t, abs=1e-9)


def test_halfplane_boundary_product_zero_infinity():
    H = HalfPlane()
    assert boundary_gromov_product(H, 0.0, math.inf, 1000, 0.2) == pytest.approx(0, abs=1e-6)
    assert boundary_product_halfplane(0.0, math.inf) == 0.0


def test_halfplane_boundary_product_sampled_matches_closed_form():
    H = HalfPlane()
    for p, q in [(0.3, 0.35), (1.0, 2.0), (-4.0, math.inf), (0.0, 0.01)]:
        assert boundary_gromov_product(H, p, q, 400, 0.2) == pytest.approx(
            boundary_product_halfplane(p, q), abs=1e-6)
    assert boundary_gromov_product(H, 0.7, 0.7, 50, 0.2) == math.inf


def test_disk_angle_roundtrip():
    for xi in (-10.0, -1.0, 0.0, 0.5, 3.0):
        assert angle_to_xi(disk_angle(xi)) == pytest.approx(xi, rel=1e-9, abs=1e-12)
    assert disk_angle(math.inf) == 0.0
    assert angle_to_xi(0.0) == math.inf


def test_mobius_is_isometry():
    H = HalfPlane()
    rng = np.random.default_rng(1)
    A = [[2.0, 1.0], [3.0, 2.0]]
    f = mobius_map(H, A)
    for _ in range(50):
        a = complex(rng.uniform(-2, 2), math.exp(rng.uniform(-1, 1)))
        b = complex(rng.uniform(-2, 2), math.exp(rng.uniform(-1, 1)))
        assert H.distance(f.func(a), f.func(b)) == pytest.approx(H.distance(a, b), rel=1e-9)
    g = mobius_map(H, mobius_inverse(A))
    z = 0.3 + 0.7j
    assert g.func(f.func(z)) == pytest.approx(z)
    with pytest.raises(InputError):
        mobius_map(H, [[1, 1], [1, 1]])


def test_vertical_perturbation_is_bounded():
    H = HalfPlane()
    base = mobius_map(H, [[1, 1], [0, 1]])
    f = vertical_perturbation(base, 0.5, seed=3)
    zs = np.array([complex(x, y) for x in np.linspace(-3, 3, 13) for y in (0.1, 1, 10)])
    d = [H.distance(a, b) for a, b in zip(base.func(zs), f.func(zs))]
    assert max(d) <= 0.5 + 1e-12


# ---------------------------------------------------------------------------
# Boundary extension and classification


def test_identity_extension_fixes_points():
    H = HalfPlane()
    ident = MetricMap.identity(H)
    for xi in (-1.0, 0.0, 2.0):
        e = boundary_extension(ident, xi, 80, 5, 0.2)
        assert e.converged and e.point == pytest.approx(xi, abs=1e-6)


def test_translation_extension_shifts_boundary():
    H = HalfPlane()
    f = mobius_map(H, [[1, 1], [0, 1]])
    for xi in (-2.0, 0.0, 0.7):
        e = boundary_extension(f, xi, 80, 5, 0.2)
        assert e.converged
        assert e.point == pytest.approx(xi + 1, abs=1e-6)
        assert e.point == pytest.approx(mobius_boundary([[1, 1], [0, 1]], xi), abs=1e-6)
    assert boundary_extension(f, math.inf, 80, 5, 0.2).point == math.inf


def test_mobius_classified_ac_as_invertible():
    H = HalfPlane()
    A = [[1.0, 1.0], [0.0, 1.0]]
    f, g = mobius_map(H, A), mobius_map(H, mobius_inverse(A))
    suite = halfplane_pair_suite(H, [-1.0, 0.0, 2.0, math.inf])
    res = classify_map(f, [-1.0, 0.0, 2.0, math.inf], suite, inverse=g, n_star=40)
    assert res["AC"] and res["AC_as"] and res["AC_inv_candidate"]


def test_inversion_classified_without_inverse_hint():
    H = HalfPlane()
    f = mobius_map(H, [[0.0, -1.0], [1.0, 0.0]])
    res = classify_map(f, [-1.0, 0.5, 2.0, math.inf])
    assert res["AC"] and res["AC_as"]


def test_tree_collapse_non_injective_extension():
    T = RootedTree(2, 12)
    f = tree_branch_collapse(T, ())
    p, q = (0,) * 12, (1,) + (0,) * 11
    res = classify_map(f, [p, q], n_star=8)
    assert not res["AC"]
    kinds = {w["kind"] for w in res["witnesses"]}
    assert "non-injective" in kinds


def test_tree_automorphism_classified_ac_as():
    T = RootedTree(2, 12)
    sample = [(0,) * 12, (1,) * 12, (0, 1) * 6, (1, 1, 0) * 4]
    suite = tree_pair_suite(T, sample, 5)
    res = classify_map(tree_automorphism(T, 4), sample, suite, n_star=8,
                       inverse=tree_automorphism_inverse(T, 4))
    assert res["AC"] and res["AC_as"] and res["AC_inv_candidate"]


def test_halfline_increasing_reparameterizations_are_ac():
    L = HalfLine()
    for fn, name in ((np.square, "sq"), (np.sqrt, "sqrt"), (np.log1p, "log1p")):
        res = classify_map(reparameterization(L, fn, name), [math.inf])
        assert res["AC"], name


def test_constant_map_not_ac():
    L = HalfLine()
    const = MetricMap(L, L, lambda x: np.zeros_like(x) + 1.0, "const", vectorized=True)
    res = classify_map(const, [math.inf])
    assert not res["AC"]
    assert res["witnesses"][0]["kind"] == "non-convergent"


def test_extensions_coincide_for_parallel_maps():
    H = HalfPlane()
    f = mobius_map(H, [[2.0, 0.0], [0.0, 0.5]])
    g = vertical_perturbation(f, 0.4, seed=1)
    assert extensions_coincide(f, g, [-1.0, 0.3, 2.0], 80, 5, 0.2)
    h = mobius_map(H, [[1.0, 1.0], [0.0, 1.0]])
    assert not extensions_coincide(f, h, [-1.0, 0.3, 2.0], 80, 5, 0.2)


def test_halfplane_suite_tags_match_profiles():
    H = HalfPlane()
    suite = halfplane_pair_suite(H, [-1.0, 0.5, math.inf])
    rep = check_ac(MetricMap.identity(H), suite, 8, 64)
    assert rep.ok and not rep.tag_mismatches
