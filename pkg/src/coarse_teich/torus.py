"""Exact extremal-length geometry of the once-punctured torus.

Teichmueller space is the upper half-plane with ``d_T = d_hyp / 2``.  A
slope ``s = (p, q)`` has extremal length ``|p + q tau|^2 / Im tau`` at
``tau`` and two slopes meet ``|p1 q2 - p2 q1|`` times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import InputError
from .slopes import Slope, farey_neighbours, scan_slopes

X0 = 1j
MINSKY_EQ_TOL = 1e-9
SCAN_ORDER = 8


@dataclass(frozen=True)
class TorusPoint:
    """Point ``tau`` of the upper half-plane."""

    tau: complex

    def __post_init__(self):
        t = complex(self.tau)
        if not (math.isfinite(t.real) and math.isfinite(t.imag)) or t.imag <= 0:
            raise InputError(f"tau={t} is not in the upper half-plane")
        object.__setattr__(self, "tau", t)


def as_tau(x) -> complex:
    """Coerce a complex, ``(re, im)`` pair, ``"re,im"`` string or TorusPoint."""
    if isinstance(x, TorusPoint):
        return x.tau
    if isinstance(x, str):
        try:
            re_, im_ = (float(v) for v in x.split(","))
        except ValueError:
            raise InputError(f"cannot parse point {x!r}; expected 're,im'") from None
        x = complex(re_, im_)
    elif isinstance(x, (tuple, list)):
        if len(x) != 2:
            raise InputError(f"point {x!r} needs two coordinates")
        x = complex(float(x[0]), float(x[1]))
    return TorusPoint(complex(x)).tau


@dataclass(frozen=True)
class WeightedMulticurve:
    """Formal sum ``sum w_k s_k`` of distinct slopes with positive weights."""

    terms: tuple

    def __post_init__(self):
        seen = set()
        terms = []
        for s, w in self.terms:
            s = Slope.parse(s)
            if not w > 0:
                raise InputError(f"weight {w} on {s} must be positive")
            if s in seen:
                raise InputError(f"slope {s} repeated")
            seen.add(s)
            terms.append((s, float(w)))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def single(cls, s, w: float = 1.0) -> "WeightedMulticurve":
        return cls(((Slope.parse(s), w),))


def _curve_terms(c):
    if isinstance(c, WeightedMulticurve):
        return c.terms
    return ((Slope.parse(c), 1.0),)


# ---------------------------------------------------------------------------
# Distances and extremal length


def hyp_distance(tau1, tau2) -> float:
    """Teichmueller distance ``(1/2) arccosh(1 + |t1 - t2|^2 / (2 Im t1 Im t2))``.

    Evaluated as ``asinh(|t1 - t2| / (2 sqrt(Im t1 Im t2)))``, which is the
    same quantity without cancellation near the diagonal.
    """
    a, b = as_tau(tau1), as_tau(tau2)
    return math.asinh(abs(a - b) / (2.0 * math.sqrt(a.imag) * math.sqrt(b.imag)))


def hyp_distance_array(t1, t2) -> np.ndarray:
    t1, t2 = np.asarray(t1, dtype=complex), np.asarray(t2, dtype=complex)
    return np.arcsinh(np.abs(t1 - t2) / (2.0 * np.sqrt(t1.imag) * np.sqrt(t2.imag)))


def ext_length(tau, curve) -> float:
    """Extremal length of a slope or weighted multicurve at ``tau``.

    A multicurve must be supported on a single slope (curves of distinct
    slopes intersect on the torus); weights enter quadratically.
    """
    t = as_tau(tau)
    terms = _curve_terms(curve)
    if len(terms) != 1:
        raise InputError("a torus multicurve must be supported on one slope")
    s, w = terms[0]
    return w * w * abs(s.p + s.q * t) ** 2 / t.imag


def ext_length_array(tau, p, q) -> np.ndarray:
    tau = np.asarray(tau, dtype=complex)
    return np.abs(np.asarray(p) + np.asarray(q) * tau) ** 2 / tau.imag


def ext_direction(tau, v) -> float:
    """Extremal length of a real direction vector ``v = (a, b)``."""
    t = as_tau(tau)
    a, b = float(v[0]), float(v[1])
    return abs(a + b * t) ** 2 / t.imag


def inter_num(c1, c2) -> float:
    """Geometric intersection number, bilinear on weighted multicurves.

    Integer-valued (returned as ``int``) on a pair of slopes.
    """
    if isinstance(c1, WeightedMulticurve) or isinstance(c2, WeightedMulticurve):
        return sum(w1 * w2 * abs(s1.p * s2.q - s2.p * s1.q)
                   for s1, w1 in _curve_terms(c1) for s2, w2 in _curve_terms(c2))
    s1, s2 = Slope.parse(c1), Slope.parse(c2)
    return abs(s1.p * s2.q - s2.p * s1.q)


def _inter_vec(v, s) -> float:
    return abs(float(v[0]) * s.q - float(v[1]) * s.p)


# ---------------------------------------------------------------------------
# Kerckhoff


def _ratio(t1: complex, t2: complex, p: int, q: int) -> float:
    return (abs(p + q * t2) ** 2 * t1.imag) / (abs(p + q * t1) ** 2 * t2.imag)


def _max_direction(t1: complex, t2: complex) -> float:
    """``p/q`` of the direction maximising ``Ext_t2 / Ext_t1`` (``inf`` for (1,0))."""
    a, b = t1.real, t1.imag
    sig = (t2 - a) / b  # t1 normalised to i
    x, y = sig.real, sig.imag
    M = np.array([[1.0, x], [x, x * x + y * y]]) / y
    w, V = np.linalg.eigh(M)
    u, v = V[:, int(np.argmax(w))]
    if v == 0:
        return math.inf
    return b * u / v - a


@dataclass
class KerckhoffResult:
    distance: float
    ratio: float
    slope: Slope
    candidates: list = field(default_factory=list)


def kerckhoff_sup(tau1, tau2, max_denominator: int = 10_000) -> KerckhoffResult:
    """Supremum of ``Ext_{tau2}(s) / Ext_{tau1}(s)`` over slopes with ``|q| <= Q``.

    A coarse scan over a small Farey set is followed by a Stern-Brocot
    descent toward the maximising real direction.  The ratio is unimodal on
    the circle of directions, so the best slope with ``|q| <= Q`` is one of
    the two Farey neighbours of that direction; the result is therefore the
    exact bounded-denominator supremum and is non-decreasing in ``Q``.
    """
    Q = int(max_denominator)
    if Q < 1:
        raise InputError("max_denominator must be >= 1")
    t1, t2 = as_tau(tau1), as_tau(tau2)
    cands = scan_slopes(min(Q, SCAN_ORDER))
    xs = _max_direction(t1, t2)
    if math.isfinite(xs) and abs(xs) < 1e15:
        nb = farey_neighbours(xs, Q)
        for f in (nb,) if isinstance(nb, Fraction) else nb:
            cands.append(Slope.of(f.numerator, f.denominator))
    best, best_s = -1.0, None
    for s in cands:
        r = _ratio(t1, t2, s.p, s.q)
        if r > best:
            best, best_s = r, s
    return KerckhoffResult(0.5 * math.log(best), best, best_s,
                           [str(s) for s in cands[-2:]])


def kerckhoff_distance(tau1, tau2, max_denominator: int = 10_000) -> float:
    """Half the log of the bounded-denominator extremal-length ratio supremum."""
    return kerckhoff_sup(tau1, tau2, max_denominator).distance


# ---------------------------------------------------------------------------
# Rays, pairings, functionals


def teich_ray(tau0, slope, t: float) -> complex:
    """Point at distance ``t`` from ``tau0`` on the geodesic toward ``-p/q``.

    Along the ray ``Ext_{R(t)}(slope) = exp(-2t) Ext_{tau0}(slope)``.
    """
    if t < 0:
        raise InputError("ray parameter t must be >= 0")
    t0 = as_tau(tau0)
    s = Slope.parse(slope)
    if s.q == 0:
        return complex(t0.real, t0.imag * math.exp(2 * t))
    xi = -s.p / s.q
    sig0 = 1.0 / (xi - t0)
    sig = complex(sig0.real, sig0.imag * math.exp(2 * t))
    return xi - 1.0 / sig


def teich_ray_array(tau0, slope, ts) -> np.ndarray:
    t0 = as_tau(tau0)
    s = Slope.parse(slope)
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise InputError("ray parameter t must be >= 0")
    if s.q == 0:
        return t0.real + 1j * t0.imag * np.exp(2 * ts)
    xi = -s.p / s.q
    sig0 = 1.0 / (xi - t0)
    return xi - 1.0 / (sig0.real + 1j * sig0.imag * np.exp(2 * ts))


def gromov_product_t(y, z, base=X0) -> float:
    """Gromov product of ``d_T`` at ``base``."""
    return 0.5 * (hyp_distance(base, y) + hyp_distance(base, z) - hyp_distance(y, z))


def i_x0(y, z, base=X0) -> float:
    """``exp(-2 <y|z>_{x0})``."""
    return math.exp(-2.0 * gromov_product_t(y, z, base))


def i_x0_boundary(s1, s2, base=X0) -> float:
    """``i(s1, s2) / sqrt(Ext_x0(s1) Ext_x0(s2))`` for slopes or direction vectors."""
    v1, v2 = _as_direction(s1), _as_direction(s2)
    num = abs(v1[0] * v2[1] - v2[0] * v1[1])
    return num / math.sqrt(ext_direction(base, v1) * ext_direction(base, v2))


def _as_direction(s):
    if isinstance(s, (Slope, str)):
        s = Slope.parse(s)
        return (s.p, s.q)
    v = tuple(s)
    if len(v) != 2 or v == (0, 0):
        raise InputError(f"bad direction {s!r}")
    if all(isinstance(c, (int, np.integer)) for c in v):
        s = Slope.of(*v)
        return (s.p, s.q)
    return (float(v[0]), float(v[1]))


@dataclass
class GMFunctional:
    """A point of the Gardiner-Masur cone, tabulated on a slope set.

    ``kind`` is ``"interior"`` (payload: ``tau``) or ``"boundary"``
    (payload: slope or real direction vector).
    """

    kind: str
    payload: object
    slopes: tuple
    values: np.ndarray
    base: complex = X0
    scale: float = 1.0

    def __call__(self, s) -> float:
        s = Slope.parse(s)
        try:
            return float(self.values[self.slopes.index(s)])
        except ValueError:
            return self.scale * float(evaluate_functional(self.kind, self.payload, s, self.base))

    def normalization(self) -> float:
        """``max_s value(s) / sqrt(Ext_x0(s))`` over the tabulated slopes."""
        e0 = np.array([ext_length(self.base, s) for s in self.slopes])
        return float(np.max(self.values / np.sqrt(e0)))

    def scaled(self, c: float) -> "GMFunctional":
        if c < 0:
            raise InputError("cone points only scale by nonnegative factors")
        return GMFunctional(self.kind, self.payload, self.slopes, c * self.values,
                            self.base, c * self.scale)


def evaluate_functional(kind, payload, s: Slope, base=X0) -> float:
    if kind == "interior":
        y = as_tau(payload)
        K = math.exp(2 * hyp_distance(base, y))
        return math.sqrt(ext_length(y, s) / K)
    if kind == "boundary":
        v = _as_direction(payload)
        return _inter_vec(v, s) / math.sqrt(ext_direction(base, v))
    raise InputError(f"unknown functional kind {kind!r}")


def gm_functional(point, slope_set, base=X0) -> GMFunctional:
    """``E_y(s) = sqrt(Ext_y(s) / K_y)``, ``K_y = exp(2 d_T(x0, y))``, or the
    boundary functional ``i(G, s) / sqrt(Ext_x0(G))`` when ``point`` is a
    slope or a real direction ``("boundary", v)``."""
    slopes = tuple(Slope.parse(s) for s in slope_set)
    if not slopes:
        raise InputError("empty slope set")
    if isinstance(point, Slope):
        kind, payload = "boundary", point
    elif isinstance(point, tuple) and len(point) == 2 and point[0] == "boundary":
        kind, payload = "boundary", _as_direction(point[1])
    else:
        kind, payload = "interior", as_tau(point)
    base = as_tau(base)
    vals = np.array([evaluate_functional(kind, payload, s, base) for s in slopes])
    return GMFunctional(kind, payload, slopes, vals, base)


@dataclass
class RayLimitReport:
    ts: list
    empirical: np.ndarray  # shape (len(ts), len(slopes))
    predicted: np.ndarray
    gaps: list
    converged: bool
    tol: float

    @property
    def final_gap(self) -> float:
        return self.gaps[-1]


def gm_ray_limit(G, slope_set, t_max: float = 8.0, steps: int = 8, tol: float = 1e-3,
                 base=X0) -> RayLimitReport:
    """Follow ``E_{R(t)}`` along the ray from the base toward ``G`` and compare
    with the boundary functional of ``G``.  A final gap above ``tol`` is
    reported as non-convergence rather than raised."""
    G = Slope.parse(G)
    slopes = [Slope.parse(s) for s in slope_set]
    if not slopes:
        raise InputError("empty slope set")
    if t_max <= 0 or steps < 1:
        raise InputError("t_max must be positive and steps >= 1")
    base = as_tau(base)
    ts = [t_max * (k + 1) / steps for k in range(steps)]
    pred = np.array([evaluate_functional("boundary", G, s, base) for s in slopes])
    emp = np.empty((len(ts), len(slopes)))
    for i, t in enumerate(ts):
        y = teich_ray(base, G, t)
        emp[i] = [evaluate_functional("interior", y, s, base) for s in slopes]
    gaps = [float(np.max(np.abs(row - pred))) for row in emp]
    return RayLimitReport(ts, emp, pred, gaps, gaps[-1] <= tol, tol)


# ---------------------------------------------------------------------------
# Mapping classes


def _check_matrix(A):
    try:
        (a, b), (c, d) = A
        a, b, c, d = (int(v) for v in (a, b, c, d))
    except (TypeError, ValueError):
        raise InputError(f"bad matrix {A!r}; expected [[a,b],[c,d]] of integers") from None
    det = a * d - b * c
    if det not in (1, -1):
        raise InputError(f"matrix determinant {det} is not +-1")
    return a, b, c, d, det


def mcg_act(A, tau) -> complex:
    """Action of ``A`` in ``GL(2, Z)`` on Teichmueller space.

    ``det = 1``: Moebius ``(a tau + b)/(c tau + d)``; ``det = -1``: the same
    rule applied to ``conj(tau)``.
    """
    a, b, c, d, det = _check_matrix(A)
    t = as_tau(tau)
    w = t if det == 1 else t.conjugate()
    den = c * w + d
    z = (a * w + b) / den
    # imaginary part recomputed in product form to keep relative precision
    return complex(z.real, t.imag / abs(den) ** 2)


def mcg_act_slope(A, slope) -> Slope:
    """Linear action on slopes compatible with :func:`mcg_act`:
    ``Ext_{A tau}(A s) = Ext_tau(s)`` and ``-p/q`` moves by the Moebius rule."""
    a, b, c, d, _ = _check_matrix(A)
    s = Slope.parse(slope)
    return Slope.of(a * s.p - b * s.q, -c * s.p + d * s.q)


def mcg_act_boundary(A, xi: float) -> float:
    a, b, c, d, _ = _check_matrix(A)
    if math.isinf(xi):
        return math.inf if c == 0 else a / c
    den = c * xi + d
    return math.inf if den == 0 else (a * xi + b) / den


# ---------------------------------------------------------------------------
# Minsky and the homothety experiment


@dataclass(frozen=True)
class MinskyResult:
    lhs: float
    rhs: float
    equality: bool

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def minsky_check(tau, s1, s2, tol: float = MINSKY_EQ_TOL) -> MinskyResult:
    """``i(s1,s2)^2`` against ``Ext(s1) Ext(s2)``; equality iff
    ``(p1 + q1 tau) conj(p2 + q2 tau)`` is purely imaginary."""
    t = as_tau(tau)
    a, b = Slope.parse(s1), Slope.parse(s2)
    lhs = float(inter_num(a, b) ** 2)
    rhs = ext_length(t, a) * ext_length(t, b)
    w = (a.p + a.q * t) * (b.p + b.q * t).conjugate()
    eq = lhs > 0 and abs(w.real) <= tol * abs(w)
    return MinskyResult(lhs, rhs, bool(eq))


def minsky_arrays(tau, p1, q1, p2, q2):
    """Vectorised ``(lhs, rhs)`` for arrays of samples."""
    tau = np.asarray(tau, dtype=complex)
    lhs = (np.asarray(p1) * q2 - np.asarray(p2) * q1).astype(float) ** 2
    rhs = ext_length_array(tau, p1, q1) * ext_length_array(tau, p2, q2)
    return lhs, rhs


def homothety_divergence(K: float, schedule: Iterable, base=X0) -> list[dict]:
    """Rows ``{n, s_a, s_b, i_x0, value}`` with ``value = i_x0^(1-K)`` for
    ``K > 1`` and ``i_x0^(K-1)`` for ``K < 1``.  Unbounded growth of
    ``value`` along a projectively convergent schedule rules out any
    rough-homothety bound on the boundary pairing."""
    K = float(K)
    if K <= 0 or K == 1:
        raise InputError("K must be positive and different from 1")
    expo = (1 - K) if K > 1 else (K - 1)
    rows = []
    for n, (sa, sb) in schedule:
        ix = i_x0_boundary(sa, sb, base)
        val = math.inf if ix == 0 else ix ** expo
        rows.append({"n": n, "s_a": str(Slope.parse(sa)), "s_b": str(Slope.parse(sb)),
                     "i_x0": ix, "value": val})
    return rows


def default_schedule(nmax: int):
    """Pairs ``((1,0), (n,1))`` for ``n = 0 .. nmax``."""
    return [(n, (Slope(1, 0), Slope(n, 1))) for n in range(nmax + 1)]
