"""Primitive integer slopes and Farey / Stern-Brocot helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError


@dataclass(frozen=True, order=True)
class Slope:
    """Primitive pair ``(p, q)`` in canonical sign (``q > 0`` or ``(1, 0)``).

    The slope ``(p, q)`` is the simple closed curve in homology class
    ``p a + q b`` on the torus; its boundary point in the half-plane is
    ``-p/q`` (``inf`` for ``(1, 0)``).
    """

    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise InputError(f"slope entries must be integers, got ({self.p!r}, {self.q!r})")
        if math.gcd(self.p, self.q) != 1:
            raise InputError(f"slope ({self.p}, {self.q}) is not primitive")
        if not (self.q > 0 or (self.q == 0 and self.p == 1)):
            raise InputError(f"slope ({self.p}, {self.q}) is not in canonical sign")

    @classmethod
    def of(cls, p, q) -> "Slope":
        """Canonical slope of any nonzero integer vector."""
        p, q = int(p), int(q)
        g = math.gcd(p, q)
        if g == 0:
            raise InputError("zero vector has no slope")
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        return cls(p, q)

    @classmethod
    def parse(cls, obj) -> "Slope":
        if isinstance(obj, Slope):
            return obj
        if isinstance(obj, str):
            parts = obj.replace("/", ",").split(",")
            if len(parts) != 2:
                raise InputError(f"cannot parse slope {obj!r}")
            obj = parts
        try:
            p, q = obj
            return cls.of(int(p), int(q))
        except (TypeError, ValueError):
            raise InputError(f"cannot parse slope {obj!r}") from None

    @property
    def boundary_point(self) -> float:
        return math.inf if self.q == 0 else -self.p / self.q

    def as_tuple(self) -> tuple[int, int]:
        return (self.p, self.q)

    def __str__(self):
        return f"({self.p},{self.q})"


def farey(n: int) -> list[Fraction]:
    """Farey sequence ``F_n`` of reduced fractions in ``[0, 1]``."""
    if n < 1:
        raise InputError("Farey order must be >= 1")
    a, b, c, d = 0, 1, 1, n
    out = [Fraction(0, 1)]
    while c <= n:
        k = (n + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        out.append(Fraction(a, b))
    return out


def scan_slopes(n: int) -> list[Slope]:
    """Slopes with ``q <= n`` and ``|p/q| <= n``, plus ``(1, 0)``.

    Ordered by increasing ``p/q`` with ``(1, 0)`` last, so cyclically
    consecutive elements are Farey neighbours (``|det| = 1``).
    """
    base = farey(n)
    out = []
    for k in range(-n, n):
        for f in base[:-1]:
            out.append(Slope.of(k * f.denominator + f.numerator, f.denominator))
    out.append(Slope(n, 1))
    out.append(Slope(1, 0))
    return out


def slopes_by_height(h: int) -> list[Slope]:
    """All canonical slopes with ``max(|p|, |q|) <= h`` in lexicographic order."""
    if h < 1:
        raise InputError("height must be >= 1")
    out = {Slope.of(p, q) for p in range(-h, h + 1) for q in range(0, h + 1)
           if (p, q) != (0, 0) and math.gcd(p, q) == 1}
    return sorted(out)


def farey_neighbours(x: float, max_den: int) -> tuple[Fraction, Fraction] | Fraction:
    """Closest fractions below and above ``x`` with denominator ``<= max_den``.

    Stern-Brocot descent toward ``x`` where each run of equal turns is taken
    in one step (continued-fraction partial quotients).  Returns a single
    fraction when ``x`` itself has denominator ``<= max_den``.
    """
    if max_den < 1:
        raise InputError("max_den must be >= 1")
    frac = Fraction(x)
    if frac.denominator <= max_den:
        return frac
    p0, q0, p1, q1 = 0, 1, 1, 0
    n, d = frac.numerator, frac.denominator
    while True:
        a = n // d
        q2 = q0 + a * q1
        if q2 > max_den:
            break
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
        n, d = d, n - a * d
    k = (max_den - q0) // q1
    b1 = Fraction(p0 + k * p1, q0 + k * q1)
    b2 = Fraction(p1, q1)
    return (b1, b2) if b1 < b2 else (b2, b1)

