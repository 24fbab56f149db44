import itertools
import json
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarse_teich.errors import InputError
from coarse_teich.metric import (MetricMap, PointSequence, SampledMetricSpace, SequencePair,
                                 check_ac, check_parallel, check_quasi_inverse,
                                 check_rough_homothety, delta_from_gromov, four_point_delta,
                                 four_point_delta_all_bases, gromov_matrix, gromov_product,
                                 profile, profile_at, semigroup_harness, _delta_numpy)
from coarse_teich.models import RootedTree, tree_automorphism, tree_branch_collapse


def line_space(xs, base=0):
    return SampledMetricSpace.from_metric(xs, lambda a, b: abs(a - b), base)


def euclid_space(points, base=0):
    a = np.asarray(points, dtype=float)
    d = np.sqrt(((a[:, None, :] - a[None, :, :]) ** 2).sum(-1))
    return SampledMetricSpace(range(len(a)), d, base)


def bfs_tree_distance(b, depth):
    """Path metric of the rooted tree by breadth-first search (independent oracle)."""
    verts = [()]
    for k in range(depth):
        verts += [w + (c,) for w in verts if len(w) == k for c in range(b)]
    adj = {v: [] for v in verts}
    for v in verts:
        if v:
            adj[v].append(v[:-1])
            adj[v[:-1]].append(v)

    def dist_from(s):
        out, q = {s: 0}, deque([s])
        while q:
            u = q.popleft()
            for w in adj[u]:
                if w not in out:
                    out[w] = out[u] + 1
                    q.append(w)
        return out

    return dist_from


# ---------------------------------------------------------------------------
# Gromov product


def test_gromov_collinear():
    X = line_space([0, 3, 5])
    assert gromov_product(X, 3, 5, 0) == 3


def test_gromov_tree_prefix_four_matches_bfs():
    T = RootedTree(2, 8)
    x1 = (0, 1, 1, 0, 0, 0, 0, 0)
    x2 = (0, 1, 1, 0, 1, 1, 0, 1)
    oracle = bfs_tree_distance(2, 8)
    d0, d1 = oracle(()), oracle(x1)
    expected = 0.5 * (d0[x1] + d0[x2] - d1[x2])
    assert expected == 4
    assert gromov_product(T, x1, x2, ()) == 4


def test_tree_distance_matrix_matches_bfs():
    T = RootedTree(2, 4)
    oracle = bfs_tree_distance(2, 4)
    pts = T.points
    D = T.distance_matrix(pts, pts)
    for i, u in enumerate(pts):
        du = oracle(u)
        assert all(D[i, j] == du[v] for j, v in enumerate(pts))


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=3, max_size=8),
       st.integers(0, 2))
@settings(max_examples=60, deadline=None)
def test_gromov_identities(pts, zi):
    X = euclid_space(pts, base=0)
    n = len(pts)
    for i, j in itertools.product(range(n), repeat=2):
        g = gromov_product(X, i, j, zi)
        assert g == pytest.approx(gromov_product(X, j, i, zi), abs=1e-12)
        assert -1e-9 <= g <= min(X.distance(zi, i), X.distance(zi, j)) + 1e-9
    for i in range(n):
        assert gromov_product(X, i, i, zi) == pytest.approx(X.distance(zi, i), abs=1e-12)


def test_gromov_matrix_agrees_with_scalar():
    X = euclid_space([(0, 0), (1, 2), (3, -1), (2, 2)])
    G = gromov_matrix(X, [0, 1, 2, 3], [3, 2], 1)
    for a, x in enumerate([0, 1, 2, 3]):
        for b, y in enumerate([3, 2]):
            assert G[a, b] == pytest.approx(gromov_product(X, x, y, 1))


# ---------------------------------------------------------------------------
# Hyperbolicity


def test_tree_delta_zero():
    assert four_point_delta(RootedTree(3, 3)) == 0.0


def test_unit_square_delta_by_exhaustive_scan():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    X = euclid_space(sq, base=0)
    d = X.dist
    best = 0.0
    for x, y, z in itertools.product(range(4), repeat=3):
        gp = lambda a, b: 0.5 * (d[0, a] + d[0, b] - d[a, b])
        best = max(best, min(gp(x, z), gp(y, z)) - gp(x, y))
    assert four_point_delta(X) == pytest.approx(best, abs=1e-15)
    # attained at x=(1,0), y=(0,1), z=(1,1)
    assert best == pytest.approx(np.sqrt(2) - 1)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=9),
       st.floats(0.01, 100))
@settings(max_examples=60, deadline=None)
def test_delta_scaling(pts, lam):
    X = euclid_space(pts)
    diam = float(X.dist.max())
    assert four_point_delta(X.scaled(lam)) == pytest.approx(
        lam * four_point_delta(X), abs=1e-12 * lam * max(diam, 1.0))


@pytest.mark.parametrize("n", [5, 40, 320])
def test_numba_kernel_matches_numpy(n):
    rng = np.random.default_rng(n)
    pts = rng.normal(size=(n, 2))
    X = euclid_space(pts)
    A = gromov_matrix(X, list(range(n)), list(range(n)))
    assert delta_from_gromov(A) == _delta_numpy(A) or \
        abs(delta_from_gromov(A) - _delta_numpy(A)) < 1e-12


def test_delta_all_bases_dominates_and_bounds():
    rng = np.random.default_rng(3)
    X = euclid_space(rng.normal(size=(12, 2)))
    d_all = four_point_delta_all_bases(X)
    for b in range(12):
        assert four_point_delta(X, b) <= d_all + 1e-12
    # changing the base point at most doubles delta
    assert d_all <= 2 * four_point_delta(X) + 1e-12


def test_delta_needs_three_points():
    with pytest.raises(InputError):
        four_point_delta(line_space([0, 1]))


# ---------------------------------------------------------------------------
# Spaces and JSON


def test_space_json_roundtrip_and_unknown_fields():
    X = line_space([0, 1, 3])
    doc = json.loads(json.dumps(X.to_json()))
    Y = SampledMetricSpace.from_json(doc)
    assert Y.points == X.points and np.array_equal(Y.dist, X.dist)
    with pytest.raises(InputError):
        SampledMetricSpace.from_json({**doc, "extra": 1})
    with pytest.raises(InputError):
        SampledMetricSpace.from_json({"points": [0, 1]})


def test_space_rejects_triangle_violation():
    with pytest.raises(InputError):
        SampledMetricSpace([0, 1, 2], [[0, 1, 5], [1, 0, 1], [5, 1, 0]], 0)


def test_space_rejects_asymmetric_and_negative():
    with pytest.raises(InputError):
        SampledMetricSpace([0, 1], [[0, 1], [2, 0]], 0)
    with pytest.raises(InputError):
        SampledMetricSpace([0, 1], [[0, -1], [-1, 0]], 0)


# ---------------------------------------------------------------------------
# Profiles


def tree_ray(T, leaf):
    return T.ray(leaf)


def test_profile_on_one_ray_is_distance():
    T = RootedTree(2, 10)
    r = tree_ray(T, (0,) * 10)
    prof = profile(r, r)
    assert prof.tolist() == [float(n) for n in range(11)]


def test_profile_tree_rays_shared_prefix_seven():
    T = RootedTree(2, 12)
    a = (1, 0, 1, 1, 0, 0, 1) + (0,) * 5
    b = (1, 0, 1, 1, 0, 0, 1) + (1,) * 5
    prof = profile(T.ray(a), T.ray(b))
    assert all(prof[n] == 7 for n in range(7, prof.horizon + 1))
    assert profile_at(T.ray(a), T.ray(b), 9) == 7


def test_profile_bounded_sequence_below_diameter():
    X = line_space([0, 1, 2, 3])
    s = PointSequence(X, [1, 3, 2, 1, 3, 2, 3])
    prof = profile(s, s)
    assert max(prof.tolist()) <= 3


@given(st.lists(st.integers(0, 5), min_size=2, max_size=12),
       st.lists(st.integers(0, 5), min_size=2, max_size=12))
@settings(max_examples=80, deadline=None)
def test_profile_symmetric_and_monotone(a, b):
    X = line_space(list(range(6)))
    sa, sb = PointSequence(X, a), PointSequence(X, b)
    p, q = profile(sa, sb).tolist(), profile(sb, sa).tolist()
    assert p == q
    assert all(p[k] <= p[k + 1] for k in range(len(p) - 1))


def test_profile_spaces_must_match():
    X, Y = line_space([0, 1, 2]), line_space([0, 1, 2])
    with pytest.raises(InputError):
        profile(PointSequence(X, [0, 1]), PointSequence(Y, [0, 1]))


# ---------------------------------------------------------------------------
# AC checks on trees


def tree_suite(T, leaves, m_star):
    rays = [T.ray(p) for p in leaves]
    pairs = []
    for i, j in itertools.combinations_with_replacement(range(len(leaves)), 2):
        pairs.append(SequencePair(rays[i], rays[j], T.lcp(leaves[i], leaves[j]) >= m_star))
    return pairs


LEAVES = [(0, 0, 0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 0, 1, 1), (0, 1, 0, 0, 0, 0, 0, 0),
          (1, 0, 1, 0, 1, 0, 1, 0), (1, 1, 1, 1, 1, 1, 1, 1), (1, 0, 0, 0, 0, 0, 0, 0)]


def test_identity_passes_ac():
    T = RootedTree(2, 8)
    rep = check_ac(MetricMap.identity(T), tree_suite(T, LEAVES, 5), 5, 6)
    assert rep.forward_ok and rep.reflect_ok and not rep.tag_mismatches


def test_tree_isometry_preserves_profiles():
    T = RootedTree(2, 8)
    f = tree_automorphism(T, 11)
    for a, b in itertools.combinations(LEAVES, 2):
        ra, rb = T.ray(a), T.ray(b)
        assert profile(ra, rb).tolist() == profile(f.apply(ra), f.apply(rb)).tolist()
    assert check_ac(f, tree_suite(T, LEAVES, 5), 5, 6).ok


def test_collapse_fails_reflect_with_witness():
    T = RootedTree(2, 8)
    f = tree_branch_collapse(T, ())
    rep = check_ac(f, tree_suite(T, LEAVES, 5), 5, 6)
    assert not rep.reflect_ok
    w = rep.witnesses[0]
    assert w["violation"] == "reflect" and len(w["domain_profile"]) == 9


# ---------------------------------------------------------------------------
# Homothety, parallel maps, quasi-inverses


def test_rough_homothety_examples():
    xs = list(range(0, 21))
    X = line_space(xs)
    assert check_rough_homothety(MetricMap.identity(X), 1, 0).max_deviation == 0
    Y = line_space(list(range(0, 41)))
    dbl = MetricMap(X, Y, lambda x: 2 * x, "double")
    assert check_rough_homothety(dbl, 2, 0).passed


def test_rough_homothety_noise_bounds():
    rng = np.random.default_rng(0)
    xs = np.linspace(0, 10, 41)
    noise = {float(x): float(rng.uniform(-0.3, 0.3)) for x in xs}
    noise[float(xs[0])] = 0.3
    noise[float(xs[1])] = -0.3
    X = line_space([float(x) for x in xs])
    Y = line_space(sorted({float(x) + noise[float(x)] for x in xs} | {0.0}))
    f = MetricMap(X, Y, lambda x: x + noise[x], "noisy")
    assert check_rough_homothety(f, 1, 0.6).passed
    assert not check_rough_homothety(f, 1, 0.1).passed
    rep = check_rough_homothety(f, 1, 0.6)
    assert rep.gromov_deviation <= rep.gromov_bound + 1e-12


def test_parallel_examples():
    xs = [float(x) for x in range(101)]
    X = line_space(xs)
    ident = MetricMap.identity(X)
    assert check_parallel(ident, ident) == 0
    Y = line_space(sorted(set(xs) | {x + 0.5 for x in xs} | {2 * x for x in xs}))
    i2 = MetricMap(X, Y, lambda x: x, "i")
    noisy = MetricMap(X, Y, lambda x: x + 0.5 * (int(x) % 2), "noisy")
    dbl = MetricMap(X, Y, lambda x: 2 * x, "dbl")
    assert check_parallel(i2, noisy) == 0.5
    assert check_parallel(i2, dbl) == 100


def test_quasi_inverse_examples():
    xs = [float(x) for x in range(-5, 6)]
    X = line_space(xs)
    ident = MetricMap.identity(X)
    assert check_quasi_inverse(ident, ident) == (0, 0)
    big = line_space([float(x) for x in range(-6, 7)])
    F = MetricMap(X, big, lambda x: x + 1, "shift")
    G = MetricMap(big, X, lambda y: min(max(y - 1, -5.0), 5.0), "unshift")
    assert check_quasi_inverse(F, G, xs, [x + 1 for x in xs]) == (0, 0)


def test_quasi_inverse_grid_rounding():
    h = 0.25
    grid = [k * h for k in range(0, 81)]
    X = line_space(grid)
    Y = line_space([2 * g for g in grid])
    F = MetricMap(X, Y, lambda x: 2 * x, "dbl")
    G = MetricMap(Y, X, lambda y: round((y / 2) / h) * h, "half")
    sx, sy = check_quasi_inverse(F, G)
    assert sx <= h and sy <= h


# ---------------------------------------------------------------------------
# Semigroup harness


def test_harness_identity_family():
    T = RootedTree(2, 8)
    rep = semigroup_harness([MetricMap.identity(T)], tree_suite(T, LEAVES, 5), 5, 6)
    assert rep.ok and rep.n_compositions == 1


def test_harness_tree_isometries_closure_and_inverses():
    from coarse_teich.models import tree_automorphism_inverse

    T = RootedTree(2, 8)
    f, g = tree_automorphism(T, 1), tree_automorphism(T, 2)
    rep = semigroup_harness([f, g, f.compose(g)], tree_suite(T, LEAVES, 5), 5, 6,
                            inverses={0: tree_automorphism_inverse(T, 1)})
    assert rep.ok
    assert rep.n_compositions == 9


def test_harness_rejects_non_self_maps():
    X = line_space([0.0, 1.0, 2.0])
    Y = line_space([0.0, 1.0, 2.0, 3.0])
    seq = PointSequence(X, [0.0, 1.0, 2.0])
    f = MetricMap(X, Y, lambda x: x + 1.0, "shift")
    with pytest.raises(InputError):
        semigroup_harness([f], [SequencePair(seq, seq, True)], 1, 1)


def test_harness_separates_distinct_isometries():
    T = RootedTree(2, 8)
    swap = MetricMap(T, T, lambda w: tuple(1 - c if k == 0 else c for k, c in enumerate(w)),
                     "swap")
    rep = semigroup_harness([MetricMap.identity(T), swap], tree_suite(T, LEAVES, 5), 5, 6)
    assert rep.ok and rep.n_close_pairs == 2
