"""Gromov products, four-point hyperbolicity and finite-horizon map checks.

Every operation works on any *space* object exposing

* ``base`` -- the reference point,
* ``distance(a, b)`` -- a float,
* ``distance_matrix(xs, ys)`` -- an ``len(xs) x len(ys)`` float array,
* ``contains(p)`` -- membership test.

:class:`SampledMetricSpace` is the finite, table-backed implementation; the
exact model spaces in :mod:`coarse_teich.models` implement the same surface.

Limits "at infinity" are replaced by explicit horizons: a pair of sequences is
indistinguishable at ``(M*, N*)`` when ``min_{n,m >= N*} <a_n|b_m> >= M*``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .errors import InputError

TRIANGLE_TOL = 1e-9


class SampledMetricSpace:
    """Finite metric space with a validated distance table."""

    def __init__(self, points: Sequence[Hashable], dist, base: Hashable,
                 validate: bool = True, tol: float = TRIANGLE_TOL):
        self.points = tuple(points)
        self._index = {p: i for i, p in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise InputError("duplicate point ids")
        d = np.array(dist, dtype=np.float64)
        n = len(self.points)
        if d.shape != (n, n):
            raise InputError(f"distance table has shape {d.shape}, expected {(n, n)}")
        if base not in self._index:
            raise InputError(f"base point {base!r} is not a point of the space")
        self.base = base
        if validate:
            _validate_table(d, tol)
        d.setflags(write=False)
        self.dist = d

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"SampledMetricSpace(n={len(self.points)}, base={self.base!r})"

    def contains(self, p) -> bool:
        try:
            return p in self._index
        except TypeError:
            return False

    def index(self, p) -> int:
        try:
            return self._index[p]
        except (KeyError, TypeError):
            raise InputError(f"unknown point id {p!r}") from None

    def distance(self, a, b) -> float:
        return float(self.dist[self.index(a), self.index(b)])

    def distance_matrix(self, xs, ys) -> np.ndarray:
        ix = [self.index(p) for p in xs]
        iy = [self.index(p) for p in ys]
        return self.dist[np.ix_(ix, iy)]

    def scaled(self, lam: float) -> "SampledMetricSpace":
        if lam <= 0:
            raise InputError("scale factor must be positive")
        return SampledMetricSpace(self.points, lam * self.dist, self.base, validate=False)

    def with_base(self, base) -> "SampledMetricSpace":
        return SampledMetricSpace(self.points, self.dist, base, validate=False)

    @classmethod
    def from_metric(cls, points, metric: Callable[[Any, Any], float], base,
                    validate: bool = True) -> "SampledMetricSpace":
        pts = list(points)
        n = len(pts)
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = metric(pts[i], pts[j])
        return cls(pts, d, base, validate=validate)

    @classmethod
    def from_json(cls, doc) -> "SampledMetricSpace":
        """Build from ``{"points": [...], "dist": [[...]], "base": id}``."""
        if isinstance(doc, str):
            doc = json.loads(doc)
        missing = {"points", "dist", "base"} - set(doc)
        if missing:
            raise InputError(f"space document missing fields: {sorted(missing)}")
        extra = set(doc) - {"points", "dist", "base"}
        if extra:
            raise InputError(f"space document has unknown fields: {sorted(extra)}")
        points = [_hashable(p) for p in doc["points"]]
        return cls(points, doc["dist"], _hashable(doc["base"]))

    def to_json(self) -> dict:
        return {"points": list(self.points), "dist": self.dist.tolist(), "base": self.base}


def _hashable(p):
    return tuple(_hashable(q) for q in p) if isinstance(p, list) else p


def _validate_table(d: np.ndarray, tol: float) -> None:
    if not np.all(np.isfinite(d)):
        raise InputError("distance table contains non-finite entries")
    if np.any(d < 0):
        raise InputError("distance table contains negative entries")
    if np.any(np.abs(np.diag(d)) > 0):
        raise InputError("distance table has nonzero diagonal")
    if not np.array_equal(d, d.T):
        raise InputError("distance table is not symmetric")
    # d[i,k] <= d[i,j] + d[j,k] for every j
    for j in range(d.shape[0]):
        slack = d[:, j][:, None] + d[j, :][None, :] - d
        if slack.min() < -tol:
            i, k = np.unravel_index(np.argmin(slack), slack.shape)
            raise InputError(
                f"triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")


# ---------------------------------------------------------------------------
# Gromov products and hyperbolicity


def gromov_product(space, x1, x2, z=None) -> float:
    """``<x1|x2>_z = (d(z,x1) + d(z,x2) - d(x1,x2)) / 2``; ``z`` defaults to the base."""
    if z is None:
        z = space.base
    for p in (x1, x2, z):
        if not space.contains(p):
            raise InputError(f"unknown point {p!r}")
    return 0.5 * (space.distance(z, x1) + space.distance(z, x2) - space.distance(x1, x2))


def gromov_matrix(space, xs, ys, z=None) -> np.ndarray:
    """Matrix of ``<x_i|y_j>_z``."""
    if z is None:
        z = space.base
    dz_x = space.distance_matrix([z], xs)[0]
    dz_y = space.distance_matrix([z], ys)[0]
    return 0.5 * (dz_x[:, None] + dz_y[None, :] - space.distance_matrix(xs, ys))


def _delta_numpy(A: np.ndarray) -> float:
    best = 0.0
    n = A.shape[0]
    for start in range(0, n, 32):
        cols = A[:, start:start + 32]
        mm = np.minimum(cols[:, None, :], cols[None, :, :]).max(axis=-1)
        best = max(best, float((mm - A).max()))
    return best


_delta_jit = None


def _delta_numba(A: np.ndarray) -> float:
    global _delta_jit
    if _delta_jit is None:
        import numba

        @numba.njit(cache=True)
        def kernel(A, order):
            # order[x] lists z by decreasing A[x, z]; once A[x, z] drops to the
            # running max no later z can raise min(A[x, z], A[y, z])
            n = A.shape[0]
            best = 0.0
            for x in range(n):
                ax = A[x]
                ox = order[x]
                for y in range(x, n):  # symmetric in x and y
                    ay = A[y]
                    m = -np.inf
                    for k in range(n):
                        z = ox[k]
                        a = ax[z]
                        if a <= m:
                            break
                        b = ay[z]
                        v = a if a < b else b
                        if v > m:
                            m = v
                    if m - ax[y] > best:
                        best = m - ax[y]
            return best

        _delta_jit = kernel
    A = np.ascontiguousarray(A)
    order = np.ascontiguousarray(np.argsort(-A, axis=1, kind="stable"))
    return float(_delta_jit(A, order))


def delta_from_gromov(A: np.ndarray) -> float:
    """Least ``delta`` with ``A[x,y] >= min(A[x,z], A[y,z]) - delta`` for all triples."""
    A = np.asarray(A, dtype=np.float64)
    if A.shape[0] <= 300:
        return max(0.0, _delta_numpy(A))
    try:
        return max(0.0, _delta_numba(A))
    except ImportError:  # pragma: no cover
        return max(0.0, _delta_numpy(A))


def four_point_delta(space, base=None) -> float:
    """Hyperbolicity constant of a finite space relative to ``base``.

    Exhaustive over ordered triples; needs at least three points.
    """
    pts = list(space.points)
    if len(pts) < 3:
        raise InputError("four_point_delta needs at least 3 points")
    return delta_from_gromov(gromov_matrix(space, pts, pts, base))


def four_point_delta_all_bases(space) -> float:
    """Maximum of :func:`four_point_delta` over every choice of base point."""
    pts = list(space.points)
    if len(pts) < 3:
        raise InputError("four_point_delta needs at least 3 points")
    D = space.distance_matrix(pts, pts)
    best = 0.0
    for w in range(len(pts)):
        A = 0.5 * (D[w][:, None] + D[w][None, :] - D)
        best = max(best, delta_from_gromov(A))
    return best


# ---------------------------------------------------------------------------
# Sequences and indistinguishability profiles


class PointSequence:
    """Finite prefix ``x_0 ... x_{N-1}`` of a sequence in ``space``."""

    def __init__(self, space, points, check: bool = True):
        self.space = space
        if isinstance(points, np.ndarray):
            self.points = points
        else:
            self.points = list(points)
        if check:
            for p in self.points:
                if not space.contains(p):
                    raise InputError(f"sequence point {p!r} is not in the space")

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"PointSequence(len={len(self.points)})"


@dataclass(frozen=True)
class IndistinguishabilityProfile:
    """``M(N) = min_{n,m >= N} <a_n|b_m>`` for ``N = 0 .. N_max``."""

    values: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n):
        return float(self.values[n])

    def indistinguishable(self, m_star: float, n_star: int) -> bool:
        if n_star < 0 or n_star > self.horizon:
            raise InputError(f"horizon N*={n_star} outside profile range 0..{self.horizon}")
        return bool(self.values[n_star] >= m_star)

    def tolist(self):
        return [float(v) for v in self.values]


def profile_from_gromov(G: np.ndarray) -> IndistinguishabilityProfile:
    # suffix minima over both indices, then read the diagonal
    S = np.minimum.accumulate(G[::-1, :], axis=0)[::-1, :]
    S = np.minimum.accumulate(S[:, ::-1], axis=1)[:, ::-1]
    k = min(G.shape)
    return IndistinguishabilityProfile(np.array([S[i, i] for i in range(k)]))


def _tail(points, n):
    return points[n:]


def profile_at(seq_a: PointSequence, seq_b: PointSequence, n_star: int) -> float:
    """``M(N*)`` alone: the minimum over the tails ``n, m >= N*``."""
    if seq_a.space is not seq_b.space:
        raise InputError("sequences live in different spaces")
    k = min(len(seq_a), len(seq_b))
    if n_star < 0 or n_star >= k:
        raise InputError(f"horizon N*={n_star} outside profile range 0..{k - 1}")
    G = gromov_matrix(seq_a.space, _tail(seq_a.points, n_star), _tail(seq_b.points, n_star))
    return float(G.min())


def profile(seq_a: PointSequence, seq_b: PointSequence) -> IndistinguishabilityProfile:
    if seq_a.space is not seq_b.space:
        raise InputError("sequences live in different spaces")
    if len(seq_a) == 0 or len(seq_b) == 0:
        raise InputError("empty sequence")
    space = seq_a.space
    return profile_from_gromov(gromov_matrix(space, seq_a.points, seq_b.points))


# ---------------------------------------------------------------------------
# Maps


class MetricMap:
    """Total map between two spaces, given as a callable on points.

    With ``vectorized=True`` the callable also accepts a numpy array of
    points and returns the array of images.
    """

    def __init__(self, domain, codomain, func: Callable, name: str = "",
                 vectorized: bool = False):
        self.domain = domain
        self.codomain = codomain
        self.func = func
        self.name = name or getattr(func, "__name__", "map")
        self.vectorized = vectorized

    def __repr__(self):
        return f"MetricMap({self.name})"

    def __call__(self, p):
        return self.func(p)

    def image_points(self, points):
        if self.vectorized and isinstance(points, np.ndarray):
            return self.func(points)
        return [self.func(p) for p in points]

    def apply(self, seq: PointSequence) -> PointSequence:
        if seq.space is not self.domain:
            raise InputError(f"{self.name}: sequence is not in the map's domain")
        return PointSequence(self.codomain, self.image_points(seq.points), check=False)

    def compose(self, inner: "MetricMap") -> "MetricMap":
        """``self o inner``."""
        if inner.codomain is not self.domain:
            raise InputError(f"cannot compose {self.name} after {inner.name}: spaces differ")
        outer = self
        vec = self.vectorized and inner.vectorized

        def composed(p):
            return outer.func(inner.func(p))

        return MetricMap(inner.domain, self.codomain, composed,
                         f"{self.name}o{inner.name}", vectorized=vec)

    @classmethod
    def identity(cls, space) -> "MetricMap":
        return cls(space, space, lambda p: p, "id", vectorized=True)

    @classmethod
    def from_table(cls, domain, codomain, pairs, name: str = "table") -> "MetricMap":
        table = {}
        for src, dst in pairs:
            src, dst = _hashable(src), _hashable(dst)
            if not domain.contains(src):
                raise InputError(f"map source {src!r} is not a domain point")
            if not codomain.contains(dst):
                raise InputError(f"map target {dst!r} is not a codomain point")
            if src in table and table[src] != dst:
                raise InputError(f"map assigns two images to {src!r}")
            table[src] = dst
        if hasattr(domain, "points"):
            missing = [p for p in domain.points if p not in table]
            if missing:
                raise InputError(f"map is not total: no image for {missing[0]!r}")

        def lookup(p):
            try:
                return table[p]
            except (KeyError, TypeError):
                raise InputError(f"map undefined at {p!r}") from None

        return cls(domain, codomain, lookup, name)

    @classmethod
    def from_json(cls, doc, domain, codomain=None) -> "MetricMap":
        """Build from ``{"map": [[from, to], ...]}``."""
        if isinstance(doc, str):
            doc = json.loads(doc)
        if "map" not in doc:
            raise InputError("map document needs a 'map' field")
        return cls.from_table(domain, domain if codomain is None else codomain, doc["map"])


@dataclass
class SequencePair:
    a: PointSequence
    b: PointSequence
    expected: bool | None = None  # expected indistinguishable?
    label: str = ""


def _sample_points(space, sample):
    if sample is not None:
        return list(sample)
    if hasattr(space, "points"):
        return list(space.points)
    raise InputError("model spaces need an explicit point sample")


@dataclass
class ACReport:
    forward_ok: bool
    reflect_ok: bool
    witnesses: list = field(default_factory=list)
    tag_mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.forward_ok and self.reflect_ok

    def to_dict(self) -> dict:
        return {"forward_ok": self.forward_ok, "reflect_ok": self.reflect_ok,
                "witnesses": self.witnesses, "tag_mismatches": self.tag_mismatches}


def check_ac(omega: MetricMap, pair_suite: Sequence[SequencePair], m_star: float,
             n_star: int, slack: float = 0.0, _cache=None) -> ACReport:
    """Finite-horizon test of asymptotic conservativity.

    Forward: a pair indistinguishable at ``(M*, N*)`` must map to a pair
    indistinguishable at ``(M* - slack, N*)``.  Reflect: a pair whose image is
    indistinguishable at ``(M*, N*)`` must have been indistinguishable at
    ``(M* - slack, N*)``.
    """
    if not pair_suite:
        raise InputError("empty pair suite")
    cache = _cache or _ImageCache()
    forward_ok = reflect_ok = True
    witnesses, mismatches = [], []
    for k, pair in enumerate(pair_suite):
        ia, ib = cache.image(omega, pair.a), cache.image(omega, pair.b)
        dom = cache.value(pair.a, pair.b, n_star)
        img = profile_at(ia, ib, n_star)
        dom_ind, img_ind = dom >= m_star, img >= m_star
        if pair.expected is not None and pair.expected != dom_ind:
            mismatches.append({"pair": k, "label": pair.label, "expected": pair.expected,
                               "profile_at_N": dom})
        bad = None
        if dom_ind and not img >= m_star - slack:
            forward_ok = False
            bad = "forward"
        if img_ind and not dom >= m_star - slack:
            reflect_ok = False
            bad = "reflect"
        if bad:
            witnesses.append({"pair": k, "label": pair.label, "violation": bad,
                              "domain_profile": profile(pair.a, pair.b).tolist(),
                              "image_profile": profile(ia, ib).tolist()})
    return ACReport(forward_ok, reflect_ok, witnesses, mismatches)


@dataclass
class HomothetyReport:
    passed: bool
    max_deviation: float
    gromov_deviation: float
    gromov_bound: float


def check_rough_homothety(omega: MetricMap, K: float, D: float, sample=None) -> HomothetyReport:
    """Sup over sampled pairs of ``|d(w x1, w x2) - K d(x1, x2)|`` against ``D``.

    Also reports the induced Gromov-product deviation
    ``|K <x1|x2>_{x0} - <w x1|w x2>_{y0}|`` and its a-priori bound
    ``3D/2 + d(y0, w x0)``.
    """
    if K <= 0:
        raise InputError("K must be positive")
    if D < 0:
        raise InputError("D must be nonnegative")
    pts = _sample_points(omega.domain, sample)
    if omega.domain.base not in pts:
        pts = [omega.domain.base] + pts
    imgs = omega.image_points(pts)
    dx = omega.domain.distance_matrix(pts, pts)
    dy = omega.codomain.distance_matrix(imgs, imgs)
    dev = float(np.abs(dy - K * dx).max())
    gx = gromov_matrix(omega.domain, pts, pts)
    gy = gromov_matrix(omega.codomain, imgs, imgs)
    gdev = float(np.abs(K * gx - gy).max())
    bound = 1.5 * D + omega.codomain.distance(omega.codomain.base, omega(omega.domain.base))
    return HomothetyReport(dev <= D, dev, gdev, bound)


def check_parallel(map1: MetricMap, map2: MetricMap, sample=None) -> float:
    """``sup_x d(w1 x, w2 x)`` over the sample."""
    if map1.domain is not map2.domain or map1.codomain is not map2.codomain:
        raise InputError("parallel maps need a common domain and codomain")
    pts = _sample_points(map1.domain, sample)
    a, b = map1.image_points(pts), map2.image_points(pts)
    Y = map1.codomain
    return float(max(Y.distance(p, q) for p, q in zip(a, b))) if len(pts) else 0.0


def check_quasi_inverse(F: MetricMap, G: MetricMap, domain_sample=None,
                        codomain_sample=None) -> tuple[float, float]:
    """``(sup_x d(G F x, x), sup_y d(F G y, y))`` over the samples."""
    if F.codomain is not G.domain or G.codomain is not F.domain:
        raise InputError("F: X -> Y and G: Y -> X required")
    xs = _sample_points(F.domain, domain_sample)
    ys = _sample_points(G.domain, codomain_sample)
    gfx = G.image_points(F.image_points(xs))
    fgy = F.image_points(G.image_points(ys))
    X, Y = F.domain, F.codomain
    sx = max((X.distance(a, b) for a, b in zip(gfx, xs)), default=0.0)
    sy = max((Y.distance(a, b) for a, b in zip(fgy, ys)), default=0.0)
    return float(sx), float(sy)


# ---------------------------------------------------------------------------
# Closeness at infinity and the semigroup laws


class _ImageCache:
    """Memoises image sequences and tail minima keyed by object identity.

    Keys hold references to the keyed objects so identities stay valid.
    """

    def __init__(self):
        self.images = {}
        self.values = {}

    def image(self, omega: MetricMap, seq: PointSequence) -> PointSequence:
        key = (id(omega), id(seq))
        if key not in self.images:
            self.images[key] = (omega, seq, omega.apply(seq))
        return self.images[key][2]

    def value(self, s1: PointSequence, s2: PointSequence, n_star: int) -> float:
        key = (id(s1), id(s2), n_star)
        if key not in self.values:
            self.values[key] = (s1, s2, profile_at(s1, s2, n_star))
        return self.values[key][2]


def _suite_sequences(pair_suite):
    seqs = []
    for pair in pair_suite:
        for s in (pair.a, pair.b):
            if all(s is not t for t in seqs):
                seqs.append(s)
    return seqs


def _asymptotic_pairs(pair_suite, m_star, n_star, cache):
    seqs = _suite_sequences(pair_suite)
    return [(s1, s2) for s1, s2 in itertools.product(seqs, repeat=2)
            if cache.value(s1, s2, n_star) >= m_star]


def close_at_infinity(map1: MetricMap, map2: MetricMap, pair_suite, m_star: float,
                      n_star: int, slack: float = 0.0, _cache=None) -> tuple[bool, list]:
    """Sample-scale closeness: indistinguishable pairs ``(a, b)`` of suite
    sequences must have ``map1(a)`` and ``map2(b)`` indistinguishable at
    ``(M* - slack, N*)``.  Returns the verdict and the failing pairs."""
    cache = _cache or _ImageCache()
    bad = []
    for s1, s2 in _asymptotic_pairs(pair_suite, m_star, n_star, cache):
        v = profile_at(cache.image(map1, s1), cache.image(map2, s2), n_star)
        if not v >= m_star - slack:
            bad.append({"maps": [map1.name, map2.name], "profile_at_N": v})
    return not bad, bad


def _stack_tails(seqs, n_star):
    tails = [s.points[n_star:] for s in seqs]
    if all(isinstance(t, np.ndarray) for t in tails):
        return np.concatenate(tails)
    return [p for t in tails for p in t]


def _closeness_matrix(maps, pair_suite, m_star, n_star, slack, cache) -> np.ndarray:
    """All-pairs :func:`close_at_infinity` verdicts, one Gromov matrix per suite pair."""
    n = len(maps)
    space = maps[0].codomain
    close = np.ones((n, n), dtype=bool)
    for s1, s2 in _asymptotic_pairs(pair_suite, m_star, n_star, cache):
        i1 = [cache.image(m, s1) for m in maps]
        i2 = [cache.image(m, s2) for m in maps]
        l1, l2 = len(i1[0]) - n_star, len(i2[0]) - n_star
        if any(len(s) - n_star != l1 for s in i1) or any(len(s) - n_star != l2 for s in i2):
            raise InputError("image sequences of one suite sequence differ in length")
        G = gromov_matrix(space, _stack_tails(i1, n_star), _stack_tails(i2, n_star))
        close &= G.reshape(n, l1, n, l2).min(axis=(1, 3)) >= m_star - slack
    return close


@dataclass
class SemigroupReport:
    composition_failures: list = field(default_factory=list)
    reflexive_failures: list = field(default_factory=list)
    symmetric_failures: list = field(default_factory=list)
    transitive_failures: list = field(default_factory=list)
    inverse_failures: list = field(default_factory=list)
    n_compositions: int = 0
    n_close_pairs: int = 0

    @property
    def ok(self) -> bool:
        return not (self.composition_failures or self.reflexive_failures
                    or self.symmetric_failures or self.transitive_failures
                    or self.inverse_failures)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()} | {"ok": self.ok}


def semigroup_harness(maps: Sequence[MetricMap], pair_suite, m_star: float, n_star: int,
                      slack: float = 0.0, inverses: dict | None = None,
                      compose: bool = True, compose_pairs=None) -> SemigroupReport:
    """Sample-scale monoid / quotient-group laws for a family of self-maps.

    * composition closure: ``f o g`` passes :func:`check_ac` whenever both do
      (over ``compose_pairs`` index pairs if given, else all pairs);
    * closeness at infinity is reflexive, symmetric and transitive on ``maps``;
    * every ``inverses[i]`` composes with ``maps[i]`` (both orders) to a map
      close to the identity.
    """
    if not maps:
        raise InputError("empty map family")
    space = maps[0].domain
    for m in maps:
        if m.domain is not space or m.codomain is not space:
            raise InputError(f"map {m.name} is not a self-map of the shared model space")
    report = SemigroupReport()
    cache = _ImageCache()
    passing = [k for k, m in enumerate(maps)
               if check_ac(m, pair_suite, m_star, n_star, slack, _cache=cache).ok]
    if compose:
        ok = set(passing)
        pairs = itertools.product(passing, repeat=2) if compose_pairs is None else \
            [(i, j) for i, j in compose_pairs if i in ok and j in ok]
        for i, j in pairs:
            f, g = maps[i], maps[j]
            fg = f.compose(g)
            report.n_compositions += 1
            rep = check_ac(fg, pair_suite, m_star, n_star, slack, _cache=cache)
            if not rep.ok:
                report.composition_failures.append({"maps": [f.name, g.name],
                                                    "witnesses": rep.witnesses})
    n = len(maps)
    close = _closeness_matrix(maps, pair_suite, m_star, n_star, slack, cache)
    report.n_close_pairs = int(close.sum())
    for i in range(n):
        if not close[i, i]:
            report.reflexive_failures.append(maps[i].name)
    for i, j in zip(*np.nonzero(close & ~close.T)):
        report.symmetric_failures.append([maps[i].name, maps[j].name])
    # i~j and j~k but not i~k
    c = close.astype(np.int64)
    two_step = (c @ c) > 0
    for i, k in zip(*np.nonzero(two_step & ~close)):
        j = int(np.nonzero(close[i] & close[:, k])[0][0])
        report.transitive_failures.append([maps[i].name, maps[j].name, maps[k].name])
    if inverses:
        ident = MetricMap.identity(space)
        for i, inv in inverses.items():
            f = maps[i]
            for comp in (inv.compose(f), f.compose(inv)):
                ok, bad = close_at_infinity(comp, ident, pair_suite, m_star, n_star,
                                            slack, _cache=cache)
                if not ok:
                    report.inverse_failures.append({"map": f.name, "composite": comp.name,
                                                    "witnesses": bad})
    return report
