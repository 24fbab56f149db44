import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarse_teich.errors import InputError
from coarse_teich.slopes import Slope, slopes_by_height
from coarse_teich.torus import (X0, WeightedMulticurve, as_tau, default_schedule, ext_length,
                                gm_functional, gm_ray_limit, gromov_product_t,
                                homothety_divergence, hyp_distance, i_x0, i_x0_boundary,
                                inter_num, kerckhoff_distance, kerckhoff_sup, mcg_act,
                                mcg_act_boundary, mcg_act_slope, minsky_arrays, minsky_check,
                                teich_ray, teich_ray_array)


def flat_ext(tau, p, q):
    """Extremal length of the straight curve ``p + q tau`` on the unit-area flat torus."""
    x, y = p + q * tau.real, q * tau.imag
    return (x * x + y * y) / tau.imag


def crossing_count(v1, v2, offset=(0.3141, 0.2718)):
    """Count transverse crossings of two closed geodesics on R^2/Z^2 by brute force.

    Solutions of ``t v1 - s v2 - offset = m`` with ``t, s`` in ``[0, 1)`` and ``m`` integral.
    """
    (a, b), (c, d) = v1, v2
    det = -a * d + b * c
    if det == 0:
        return 0
    R = abs(a) + abs(b) + abs(c) + abs(d) + 2
    n = 0
    for m in itertools.product(range(-R, R + 1), repeat=2):
        rx, ry = m[0] + offset[0], m[1] + offset[1]
        t = (rx * (-d) - (-c) * ry) / det
        s = (a * ry - b * rx) / det
        if 0 <= t < 1 and 0 <= s < 1:
            n += 1
    return n


def half_arccosh(a, b):
    return 0.5 * math.acosh(1 + abs(a - b) ** 2 / (2 * a.imag * b.imag))


taus = st.builds(lambda x, u: complex(x, math.exp(u)), st.floats(-3, 3), st.floats(-3, 3))
small = st.integers(-12, 12)
slopes = st.tuples(small, small).filter(lambda v: math.gcd(*v) == 1).map(lambda v: Slope.of(*v))


def test_ext_examples():
    assert ext_length(1j, (1, 0)) == 1.0
    assert ext_length(1j, (0, 1)) == 1.0
    assert ext_length(2j, (1, 0)) == 0.5
    assert ext_length(2j, (0, 1)) == 2.0
    assert ext_length(1j, WeightedMulticurve.single(Slope(1, 1), 3.0)) == pytest.approx(18.0)
    with pytest.raises(InputError):
        ext_length(-1j, (1, 0))


@given(taus, slopes)
@settings(max_examples=200, deadline=None)
def test_ext_matches_flat_torus(tau, s):
    assert ext_length(tau, s) == pytest.approx(flat_ext(tau, s.p, s.q), rel=1e-12)


def test_intersection_examples():
    assert inter_num((1, 0), (0, 1)) == 1
    assert inter_num((2, 3), (2, 3)) == 0
    assert inter_num((1, 2), (3, 5)) == 1
    assert inter_num(WeightedMulticurve.single(Slope(1, 0), 2.0), Slope(1, 3)) == 6.0


@given(slopes, slopes)
@settings(max_examples=60, deadline=None)
def test_intersection_matches_crossing_count(a, b):
    assert inter_num(a, b) == crossing_count(a.as_tuple(), b.as_tuple())


def test_as_tau_forms():
    assert as_tau("0.5,2") == 0.5 + 2j
    assert as_tau((0, 1)) == 1j
    for bad in ("1", (1, 0), (1, -2), complex(math.inf, 1)):
        with pytest.raises(InputError):
            as_tau(bad)


def test_hyp_distance_oracle():
    assert hyp_distance(1j, 2j) == pytest.approx(0.5 * math.log(2))
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = complex(rng.uniform(-2, 2), math.exp(rng.uniform(-2, 2)))
        b = complex(rng.uniform(-2, 2), math.exp(rng.uniform(-2, 2)))
        assert hyp_distance(a, b) == pytest.approx(half_arccosh(a, b), rel=1e-9, abs=1e-12)


def test_kerckhoff_example():
    r = kerckhoff_sup(1j, 2j)
    assert r.distance == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert r.slope == Slope(0, 1)
    assert kerckhoff_distance(2j, 1j) == pytest.approx(0.5 * math.log(2), abs=1e-12)


@given(taus, taus)
@settings(max_examples=100, deadline=None)
def test_kerckhoff_matches_hyperbolic(a, b):
    d = hyp_distance(a, b)
    k = kerckhoff_distance(a, b, 10_000)
    assert k <= d + 1e-9
    if d <= 2:
        assert k == pytest.approx(d, abs=1e-6)


@given(taus, taus)
@settings(max_examples=50, deadline=None)
def test_kerckhoff_monotone_in_denominator(a, b):
    vals = [kerckhoff_distance(a, b, Q) for Q in (1, 3, 10, 100, 1000)]
    assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))


def test_ray_examples():
    for t in (0.0, 0.5, 2.0):
        assert teich_ray(1j, (1, 0), t) == pytest.approx(1j * math.exp(2 * t))
    assert teich_ray(0.3 + 2j, (2, 3), 0.0) == pytest.approx(0.3 + 2j)
    with pytest.raises(InputError):
        teich_ray(1j, (1, 0), -1.0)


@given(taus, slopes, st.floats(0, 5))
@settings(max_examples=150, deadline=None)
def test_ray_contracts_slope_and_is_geodesic(tau0, s, t):
    z = teich_ray(tau0, s, t)
    assert hyp_distance(tau0, z) == pytest.approx(t, abs=1e-8)
    assert ext_length(z, s) == pytest.approx(math.exp(-2 * t) * ext_length(tau0, s), rel=1e-8)
    assert teich_ray_array(tau0, s, [t])[0] == pytest.approx(z, rel=1e-12)


def test_i_x0_examples():
    assert i_x0(X0, X0) == 1.0
    assert i_x0(2j, 2j) == pytest.approx(0.5)
    assert gromov_product_t(2j, 2j) == pytest.approx(0.5 * math.log(2))


def test_i_x0_boundary_examples():
    assert i_x0_boundary((1, 0), (0, 1)) == 1.0
    assert i_x0_boundary((2, 3), (2, 3)) == 0.0
    for n in range(6):
        assert i_x0_boundary((1, 0), (n, 1)) == pytest.approx(1 / math.sqrt(n * n + 1))


def test_gm_functional_at_base_is_root_ext():
    ss = slopes_by_height(4)
    E = gm_functional(X0, ss)
    for s in ss:
        assert E(s) == pytest.approx(math.sqrt(ext_length(X0, s)))
    assert E.normalization() == pytest.approx(1.0)


def test_boundary_functional_vanishes_on_its_slope():
    ss = slopes_by_height(5)
    G = gm_functional(Slope(2, 3), ss)
    assert G(Slope(2, 3)) == 0.0
    assert G(Slope(1, 0)) == pytest.approx(3 / math.sqrt(ext_length(X0, (2, 3))))


@pytest.mark.parametrize("G", [(1, 0), (0, 1), (2, 3), (-1, 4)])
def test_ray_limit_is_boundary_functional(G):
    rep = gm_ray_limit(G, slopes_by_height(6), t_max=8.0)
    assert rep.converged
    assert rep.gaps[0] > rep.final_gap


A_MATS = [[[1, 1], [0, 1]], [[0, -1], [1, 0]], [[2, 1], [1, 1]], [[0, 1], [1, 0]],
          [[1, 0], [3, -1]], [[-1, 0], [0, -1]]]


def test_mcg_identity():
    for tau in (1j, 0.3 + 2j):
        assert mcg_act([[1, 0], [0, 1]], tau) == tau
    assert mcg_act_slope([[1, 0], [0, 1]], (3, 5)) == Slope(3, 5)
    with pytest.raises(InputError):
        mcg_act([[2, 0], [0, 1]], 1j)


@pytest.mark.parametrize("A", A_MATS)
@given(a=taus, b=taus, s=slopes)
@settings(max_examples=40, deadline=None)
def test_mcg_isometry_and_equivariance(A, a, b, s):
    assert hyp_distance(mcg_act(A, a), mcg_act(A, b)) == pytest.approx(
        hyp_distance(a, b), rel=1e-7, abs=1e-9)
    As = mcg_act_slope(A, s)
    assert ext_length(mcg_act(A, a), As) == pytest.approx(ext_length(a, s), rel=1e-7)
    assert mcg_act_boundary(A, s.boundary_point) == pytest.approx(As.boundary_point)


def test_minsky_examples():
    r = minsky_check(1j, (1, 0), (0, 1))
    assert (r.lhs, r.rhs, r.equality, r.holds) == (1.0, 1.0, True, True)
    r = minsky_check(2j, (1, 0), (0, 1))
    assert r.equality and r.rhs == pytest.approx(1.0)
    r = minsky_check(0.5 + 1j, (1, 0), (0, 1))
    assert r.rhs > r.lhs and not r.equality
    assert minsky_check(1j, (1, 1), (1, 1)).lhs == 0.0


@given(taus, slopes, slopes)
@settings(max_examples=300, deadline=None)
def test_minsky_inequality(tau, a, b):
    r = minsky_check(tau, a, b)
    assert r.holds
    lhs, rhs = minsky_arrays(np.array([tau]), *(np.array([v]) for v in (a.p, a.q, b.p, b.q)))
    assert lhs[0] == r.lhs and rhs[0] == pytest.approx(r.rhs, rel=1e-12)


@given(slopes, slopes, taus)
@settings(max_examples=100, deadline=None)
def test_minsky_equality_transported_from_base(a, b, tau):
    if inter_num(a, b) != 1:
        return
    # (1,0), (0,1) are orthogonal at i; a mapping class sending them to a, b moves the equality case
    A = [[a.p, -b.p], [-a.q, b.q]]
    assert {mcg_act_slope(A, (1, 0)), mcg_act_slope(A, (0, 1))} == {a, b}
    r = minsky_check(mcg_act(A, 1j), a, b)
    assert r.equality
    assert r.lhs == pytest.approx(r.rhs, rel=1e-9)
    r = minsky_check(tau, a, b)
    if r.equality:
        assert r.lhs == pytest.approx(r.rhs, rel=1e-9)
    else:
        assert r.lhs < r.rhs


def test_homothety_divergence():
    rows = homothety_divergence(2.0, default_schedule(6))
    assert [r["value"] for r in rows] == pytest.approx([math.sqrt(n * n + 1) for n in range(7)])
    rows = homothety_divergence(0.5, default_schedule(6))
    assert [r["value"] for r in rows] == pytest.approx([(n * n + 1) ** 0.25 for n in range(7)])
    assert rows[0]["value"] == 1.0
    for K in (0, 1, -2):
        with pytest.raises(InputError):
            homothety_divergence(K, default_schedule(2))
