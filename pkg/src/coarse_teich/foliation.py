"""Symbolic measured foliations over a declared curve system.

A surface is described only by combinatorial data: named curves with an
intersection matrix and named supports (essential subsurfaces) with a
complexity, boundary curves, and curves declared inside or disjoint.  A
foliation in normal form is a list of arational components (one class per
support), essential curves and peripheral curves.

Zero / nonzero intersection with a foliation is decided symbolically:

* curve vs curve: the intersection matrix;
* curve vs arational on ``X``: zero iff the curve is a boundary curve of
  ``X`` or disjoint from ``X``; a curve inside ``X``, or one meeting a
  boundary or inside curve of ``X``, meets it;
* arational on ``Y`` vs arational on ``X``: zero iff ``X == Y`` or the
  supports are disjoint; overlapping supports (a curve of one inside or
  crossing the other, or a boundary curve of one inside the other) meet.

Anything not decidable from the declarations raises
:class:`~coarse_teich.errors.InsufficientDeclarations`.

Null sets are computed over *test objects*: every declared curve together
with one arational token per support.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, InsufficientDeclarations

KINDS = ("arational", "essential", "peripheral")
SYSTEM_FIELDS = {"signature", "curves", "imatrix", "supports", "name", "assumptions"}
SUPPORT_FIELDS = {"id", "cx", "boundary", "inside", "disjoint", "genus"}
DATA_DIR = Path(__file__).with_name("data")


@dataclass(frozen=True)
class Support:
    id: str
    cx: int
    boundary: tuple = ()
    inside: tuple = ()
    disjoint: tuple = ()
    genus: int | None = None


class CurveSystem:
    """Declared curves, intersection numbers and supports of a surface ``S_{g,n}``."""

    def __init__(self, signature, curves, imatrix, supports, name: str = "",
                 assumptions: Sequence[str] = ()):
        try:
            g, n = (int(v) for v in signature)
        except (TypeError, ValueError):
            raise InputError(f"signature {signature!r} must be [g, n]") from None
        if g < 0 or n < 0:
            raise InputError("signature entries must be nonnegative")
        self.g, self.n = g, n
        self.cx = 3 * g - 3 + n
        if self.cx < 1 or 2 - 2 * g - n >= 0:
            raise InputError(f"signature ({g},{n}) needs cx >= 1 and negative Euler characteristic")
        self.name = name
        self.assumptions = tuple(assumptions)
        self.curves = tuple(str(c) for c in curves)
        if len(set(self.curves)) != len(self.curves):
            raise InputError("duplicate curve names")
        self._cidx = {c: i for i, c in enumerate(self.curves)}
        M = np.array(imatrix, dtype=np.int64) if len(self.curves) else np.zeros((0, 0), np.int64)
        if M.shape != (len(self.curves), len(self.curves)):
            raise InputError(f"imatrix has shape {M.shape}, expected {(len(self.curves),) * 2}")
        if np.any(M < 0) or not np.array_equal(M, M.T) or np.any(np.diag(M) != 0):
            raise InputError("imatrix must be symmetric, nonnegative, with zero diagonal")
        M.setflags(write=False)
        self.imatrix = M
        self.supports = {}
        for s in supports:
            s = s if isinstance(s, Support) else _support_from_dict(s)
            if s.id in self.supports:
                raise InputError(f"duplicate support id {s.id!r}")
            self.supports[s.id] = s
        self._validate()

    # construction --------------------------------------------------------
    @classmethod
    def from_json(cls, doc) -> "CurveSystem":
        if isinstance(doc, (str, Path)) and not str(doc).lstrip().startswith("{"):
            doc = json.loads(Path(doc).read_text())
        elif isinstance(doc, str):
            doc = json.loads(doc)
        extra = set(doc) - SYSTEM_FIELDS
        if extra:
            raise InputError(f"curve system has unknown fields: {sorted(extra)}")
        missing = {"signature", "curves", "imatrix", "supports"} - set(doc)
        if missing:
            raise InputError(f"curve system missing fields: {sorted(missing)}")
        return cls(doc["signature"], doc["curves"], doc["imatrix"], doc["supports"],
                   doc.get("name", ""), doc.get("assumptions", ()))

    def to_json(self) -> dict:
        sup = []
        for s in self.supports.values():
            d = {"id": s.id, "cx": s.cx, "boundary": list(s.boundary),
                 "inside": list(s.inside), "disjoint": list(s.disjoint)}
            if s.genus is not None:
                d["genus"] = s.genus
            sup.append(d)
        return {"name": self.name, "signature": [self.g, self.n], "curves": list(self.curves),
                "imatrix": self.imatrix.tolist(), "supports": sup,
                "assumptions": list(self.assumptions)}

    def _validate(self):
        for s in self.supports.values():
            if s.cx < 1 or s.cx > self.cx:
                raise InputError(f"support {s.id}: cx={s.cx} outside 1..{self.cx}")
            for lst in (s.boundary, s.inside, s.disjoint):
                for c in lst:
                    self.index(c)
            groups = [set(s.boundary), set(s.inside), set(s.disjoint)]
            for a, b in itertools.combinations(groups, 2):
                if a & b:
                    raise InputError(f"support {s.id}: curve {sorted(a & b)[0]!r} "
                                     f"declared in two relations")
            for bc in s.boundary:
                for c in s.inside:
                    if self.i(bc, c):
                        raise InputError(f"support {s.id}: boundary curve {bc!r} "
                                         f"meets inside curve {c!r}")
            for c in s.disjoint:
                for d in s.inside:
                    if self.i(c, d):
                        raise InputError(f"support {s.id}: curve {c!r} declared disjoint "
                                         f"but meets inside curve {d!r}")
        for X, Y in itertools.combinations(self.supports.values(), 2):
            if self.supports_disjoint(X.id, Y.id):
                for c in X.inside:
                    for d in Y.inside:
                        if self.i(c, d):
                            raise InputError(f"curves {c!r} and {d!r} inside disjoint "
                                             f"supports {X.id}, {Y.id} intersect")

    # lookups -------------------------------------------------------------
    def index(self, c) -> int:
        try:
            return self._cidx[c]
        except (KeyError, TypeError):
            raise InputError(f"unknown curve {c!r}") from None

    def support(self, sid) -> Support:
        try:
            return self.supports[sid]
        except (KeyError, TypeError):
            raise InputError(f"unknown support {sid!r}") from None

    def i(self, c1, c2) -> int:
        return int(self.imatrix[self.index(c1), self.index(c2)])

    def relation(self, c, sid) -> str:
        """``boundary``, ``inside``, ``disjoint`` or ``crosses`` (derived)."""
        s = self.support(sid)
        self.index(c)
        if c in s.boundary:
            return "boundary"
        if c in s.inside:
            return "inside"
        if c in s.disjoint:
            return "disjoint"
        if any(self.i(c, b) for b in s.boundary) or any(self.i(c, d) for d in s.inside):
            return "crosses"
        raise InsufficientDeclarations(c, sid)

    def relation_or_none(self, c, sid):
        try:
            return self.relation(c, sid)
        except InsufficientDeclarations:
            return None

    def supports_disjoint(self, a, b) -> bool:
        X, Y = self.support(a), self.support(b)
        if a == b or not X.inside or not Y.inside:
            return False
        return (all(c in Y.disjoint for c in X.inside)
                and all(c in X.disjoint for c in Y.inside))

    def arational_pair_zero(self, a, b) -> bool:
        if a == b or self.supports_disjoint(a, b):
            return True
        X, Y = self.support(a), self.support(b)
        # a boundary curve of one support lying inside the other forces an overlap
        if any(c in Y.inside for c in X.boundary) or any(c in X.inside for c in Y.boundary):
            return False
        for c in X.inside:
            if self.relation_or_none(c, b) in ("inside", "crosses"):
                return False
        for c in Y.inside:
            if self.relation_or_none(c, a) in ("inside", "crosses"):
                return False
        raise InsufficientDeclarations(f"arational[{a}]", b)

    @cached_property
    def test_objects(self) -> tuple:
        return tuple(("curve", c) for c in self.curves) + tuple(
            ("arational", s) for s in self.supports)

    def euler_weight(self, sid) -> int:
        """``-chi`` of a support: ``cx + 1 - genus``."""
        s = self.support(sid)
        genus = s.genus if s.genus is not None else (0 if self.g == 0 else None)
        if genus is None:
            raise InputError(f"support {sid}: genus not declared")
        return s.cx + 1 - genus


def _support_from_dict(d) -> Support:
    extra = set(d) - SUPPORT_FIELDS
    if extra:
        raise InputError(f"support has unknown fields: {sorted(extra)}")
    if "id" not in d or "cx" not in d:
        raise InputError("support needs 'id' and 'cx'")
    return Support(str(d["id"]), int(d["cx"]), tuple(d.get("boundary", ())),
                   tuple(d.get("inside", ())), tuple(d.get("disjoint", ())),
                   None if d.get("genus") is None else int(d["genus"]))


# ---------------------------------------------------------------------------
# Foliations


@dataclass(frozen=True)
class Component:
    kind: str
    ref: str
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown component kind {self.kind!r}")
        if not self.weight > 0:
            raise InputError(f"component weight {self.weight} must be positive")


def Arational(ref, weight=1.0):
    return Component("arational", ref, weight)


def Essential(ref, weight=1.0):
    return Component("essential", ref, weight)


def Peripheral(ref, weight=1.0):
    return Component("peripheral", ref, weight)


class SymbolicFoliation:
    """Normal-form foliation; components are validated against the system."""

    def __init__(self, system: CurveSystem, components: Iterable[Component]):
        self.system = system
        comps = tuple(components)
        self.components = tuple(sorted(comps, key=lambda c: (KINDS.index(c.kind), c.ref)))
        self._validate()

    def __str__(self):
        return " + ".join(f"{c.kind[0].upper()}({c.ref})" if c.weight == 1.0 else
                          f"{c.weight:g}*{c.kind[0].upper()}({c.ref})" for c in self.components)

    def __repr__(self):
        return f"SymbolicFoliation({self})"

    @classmethod
    def parse(cls, system, text: str) -> "SymbolicFoliation":
        """Compact form ``"A:Y + E:d + 2*P:a"`` (kinds A, E, P; optional weight)."""
        kinds = {k[0].upper(): k for k in KINDS}
        comps = []
        for term in text.split("+"):
            term = term.strip()
            w = 1.0
            if "*" in term:
                ws, term = term.split("*", 1)
                try:
                    w = float(ws)
                except ValueError:
                    raise InputError(f"bad weight in {term!r}") from None
            kind, sep, ref = term.partition(":")
            if not sep or kind.strip().upper() not in kinds or not ref.strip():
                raise InputError(f"cannot parse foliation term {term!r}; use K:ref with K in A,E,P")
            comps.append(Component(kinds[kind.strip().upper()], ref.strip(), w))
        return cls(system, comps)

    @classmethod
    def from_json(cls, system, doc) -> "SymbolicFoliation":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if set(doc) - {"components"}:
            raise InputError(f"foliation has unknown fields: {sorted(set(doc) - {'components'})}")
        comps = []
        for c in doc.get("components", []):
            if set(c) - {"kind", "ref", "weight"}:
                raise InputError(f"component has unknown fields: {sorted(set(c) - {'kind', 'ref', 'weight'})}")
            comps.append(Component(c["kind"], str(c["ref"]), float(c.get("weight", 1.0))))
        return cls(system, comps)

    def to_json(self) -> dict:
        return {"components": [{"kind": c.kind, "ref": c.ref, "weight": c.weight}
                               for c in self.components]}

    def of_kind(self, kind) -> tuple:
        return tuple(c.ref for c in self.components if c.kind == kind)

    @property
    def supports(self) -> tuple:
        return self.of_kind("arational")

    @property
    def essential(self) -> tuple:
        return self.of_kind("essential")

    @property
    def peripheral(self) -> tuple:
        return self.of_kind("peripheral")

    def scaled(self, c: float) -> "SymbolicFoliation":
        return SymbolicFoliation(self.system, [Component(x.kind, x.ref, x.weight * c)
                                               for x in self.components])

    def structure(self) -> tuple:
        """Weight-free key of the truncated foliation."""
        return (tuple(sorted(self.supports)), tuple(sorted(self.essential)))

    def _validate(self):
        S = self.system
        sup, ess, per = self.supports, self.essential, self.peripheral
        if not self.components:
            raise InputError("a foliation needs at least one component")
        for lst, what in ((sup, "support"), (ess, "essential curve"), (per, "peripheral curve")):
            if len(set(lst)) != len(lst):
                raise InputError(f"repeated {what}")
        for a in sup:
            S.support(a)
        for a, b in itertools.combinations(sup, 2):
            if not S.supports_disjoint(a, b):
                raise InputError(f"arational supports {a}, {b} are not declared disjoint")
        for c in ess:
            for a in sup:
                if S.relation(c, a) != "disjoint":
                    raise InputError(f"essential curve {c!r} is not disjoint from support {a}")
        for c, d in itertools.combinations(ess, 2):
            if S.i(c, d):
                raise InputError(f"essential curves {c!r}, {d!r} intersect")
        for c in per:
            S.index(c)
            if not any(c in S.support(a).boundary for a in sup):
                raise InputError(f"peripheral curve {c!r} bounds no listed support")
            if c in ess:
                raise InputError(f"curve {c!r} is both essential and peripheral")
        if sum(S.support(a).cx for a in sup) + len(ess) > S.cx:
            raise InputError("components exceed the complexity of the surface")


def _same_system(G, H):
    if G.system is not H.system:
        raise InputError("foliations live on different curve systems")


def truncate(G: SymbolicFoliation) -> SymbolicFoliation:
    """Drop peripheral components."""
    return SymbolicFoliation(G.system, [c for c in G.components if c.kind != "peripheral"])


def top_equiv(G: SymbolicFoliation, H: SymbolicFoliation) -> bool:
    """Same arational supports and essential curves after truncation, weights ignored."""
    _same_system(G, H)
    return G.structure() == H.structure()


def pairing_zero(system: CurveSystem, obj, G: SymbolicFoliation) -> bool:
    """Whether a test object ``("curve", c)`` or ``("arational", X)`` has zero
    intersection with ``G``."""
    kind, ref = obj
    for comp in G.components:
        if comp.kind == "arational":
            if kind == "curve":
                if system.relation(ref, comp.ref) not in ("boundary", "disjoint"):
                    return False
            elif not system.arational_pair_zero(ref, comp.ref):
                return False
        else:
            if kind == "curve":
                if system.i(ref, comp.ref):
                    return False
            elif system.relation(comp.ref, ref) not in ("boundary", "disjoint"):
                return False
    return True


def null_curves(G: SymbolicFoliation) -> frozenset:
    """Declared curves with zero intersection with ``G``."""
    S = G.system
    return frozenset(c for c in S.curves if pairing_zero(S, ("curve", c), G))


def null_set(G: SymbolicFoliation) -> frozenset:
    """Test objects (curves and arational tokens) with zero intersection with ``G``."""
    S = G.system
    return frozenset(o for o in S.test_objects if pairing_zero(S, o, G))


def absorbed(G: SymbolicFoliation, H: SymbolicFoliation) -> bool:
    """Every component of ``G`` truncated is a component of ``H`` truncated,
    or (for a curve) a boundary curve of an arational support of ``H``."""
    S = G.system
    hs, he = set(H.supports), set(H.essential)
    hb = {b for a in hs for b in S.support(a).boundary}
    return set(G.supports) <= hs and all(c in he or c in hb for c in G.essential)


def nullset_compare(G: SymbolicFoliation, H: SymbolicFoliation, check: bool = True) -> str:
    """``"equal"``, ``"G⊋H"``, ``"H⊋G"`` or ``"incomparable"``.

    ``N(G) ⊇ N(H)`` iff every component of ``G`` is absorbed by ``H``.  With
    ``check`` the verdict is compared with containment of test-object null
    sets and a disagreement is reported as an input error (the system does
    not separate the two foliations).
    """
    _same_system(G, H)
    if top_equiv(G, H):
        verdict = "equal"
    else:
        gh, hg = absorbed(G, H), absorbed(H, G)
        verdict = "G⊋H" if gh and not hg else "H⊋G" if hg and not gh else \
            "equal" if gh and hg else "incomparable"
    if check:
        ng, nh = null_set(G), null_set(H)
        brute = ("equal" if ng == nh else "G⊋H" if ng > nh else "H⊋G" if nh > ng
                 else "incomparable")
        if brute != verdict:
            raise InputError(f"curve system does not separate {G} and {H}: rule gives "
                             f"{verdict}, test objects give {brute}")
    return verdict


def xi0(G: SymbolicFoliation, weight: str = "cx") -> tuple[int, int]:
    """Complexity ``(sum of support weights, number of essential curves)``.

    ``weight="cx"`` uses declared complexities; ``weight="euler"`` uses
    ``-chi`` of each support.
    """
    S = G.system
    if weight == "cx":
        w = sum(S.support(a).cx for a in G.supports)
    elif weight == "euler":
        w = sum(S.euler_weight(a) for a in G.supports)
    else:
        raise InputError(f"unknown weight {weight!r}")
    return (w, len(G.essential))


# ---------------------------------------------------------------------------
# Families and towers


def generate_family(system: CurveSystem, max_supports: int = 3,
                    max_curves: int | None = None) -> list[SymbolicFoliation]:
    """Every truncated normal form with ``<= max_supports`` arational supports
    and ``<= max_curves`` (default ``cx``) essential curves, in a fixed order."""
    S = system
    max_curves = S.cx if max_curves is None else max_curves
    sids = list(S.supports)
    out = []
    for k in range(0, max_supports + 1):
        for sup in itertools.combinations(sids, k):
            if any(not S.supports_disjoint(a, b) for a, b in itertools.combinations(sup, 2)):
                continue
            budget = S.cx - sum(S.support(a).cx for a in sup)
            if budget < 0:
                continue
            free = [c for c in S.curves
                    if all(S.relation_or_none(c, a) == "disjoint" for a in sup)]
            for m in range(0, min(max_curves, budget) + 1):
                for ess in itertools.combinations(free, m):
                    if k == 0 and m == 0:
                        continue
                    if any(S.i(c, d) for c, d in itertools.combinations(ess, 2)):
                        continue
                    comps = [Arational(a) for a in sup] + [Essential(c) for c in ess]
                    out.append(SymbolicFoliation(S, comps))
    return out


@dataclass
class Tower:
    height: int
    chain: list

    def to_json(self) -> dict:
        return {"height": self.height, "chain": [G.to_json() for G in self.chain]}


class TowerIndex:
    """Strict null-set inclusions on a family, with memoised longest chains."""

    def __init__(self, family: Sequence[SymbolicFoliation], check: bool = True):
        if not family:
            raise InputError("empty family")
        seen, fam = set(), []
        for G in family:
            if G.structure() not in seen:
                seen.add(G.structure())
                fam.append(truncate(G))
        self.family = fam
        self.system = fam[0].system
        n = len(fam)
        self.below = [[j for j in range(n) if j != i
                       and nullset_compare(fam[i], fam[j], check) == "G⊋H"] for i in range(n)]
        self._memo = {}

    def index_of(self, G) -> int:
        key = G.structure()
        for i, H in enumerate(self.family):
            if H.structure() == key:
                return i
        raise InputError(f"{G} is not in the family")

    def longest(self, i) -> list[int]:
        if i not in self._memo:
            best = [i]
            for j in self.below[i]:
                cand = [i] + self.longest(j)
                if len(cand) > len(best):
                    best = cand
            self._memo[i] = best
        return self._memo[i]

    def maximal_towers(self, i) -> list[list[int]]:
        """All chains from ``i`` that cannot be extended downward."""
        if not self.below[i]:
            return [[i]]
        return [[i] + t for j in self.below[i] for t in self.maximal_towers(j)]


def tower_height(G: SymbolicFoliation, family: Sequence[SymbolicFoliation],
                 index: TowerIndex | None = None) -> Tower:
    """Longest strict chain ``N(G) ⊋ N(G_2) ⊋ ...`` in the family starting at ``G``.

    The height never exceeds the complexity of the surface; a longer chain
    would be reported as an input error since it means the system is
    inconsistent.
    """
    idx = index or TowerIndex(list(family) + [G])
    chain = idx.longest(idx.index_of(G))
    if len(chain) > idx.system.cx:
        raise InputError(f"tower of height {len(chain)} exceeds cx={idx.system.cx}")
    return Tower(len(chain), [idx.family[k] for k in chain])


# ---------------------------------------------------------------------------
# Experiments


def vis_experiment(system: CurveSystem, alpha, beta, gamma, base_ext_lengths=None) -> dict:
    """Intersection pairings ``i(a,b) / sqrt(Ext(a) Ext(b))`` among three curves
    with ``i(alpha,beta) = i(alpha,gamma) = 0 < i(beta,gamma)``.

    Zero pairing means the boundary points are indistinguishable, so the
    pattern exhibits a relation that is not transitive.
    """
    for c in (alpha, beta, gamma):
        system.index(c)
    if not (system.i(alpha, beta) == 0 and system.i(alpha, gamma) == 0
            and system.i(beta, gamma) > 0):
        raise InputError("need i(alpha,beta) = i(alpha,gamma) = 0 and i(beta,gamma) > 0; "
                         "this system does not realise the pattern for the given curves")
    ext = {c: 1.0 for c in (alpha, beta, gamma)}
    if base_ext_lengths:
        for c, v in dict(base_ext_lengths).items():
            if c not in ext:
                raise InputError(f"extremal length given for unused curve {c!r}")
            if not float(v) > 0:
                raise InputError("base extremal lengths must be positive")
            ext[c] = float(v)

    def pair(a, b):
        return system.i(a, b) / math.sqrt(ext[a] * ext[b])

    ab, ag, bg = pair(alpha, beta), pair(alpha, gamma), pair(beta, gamma)
    return {"alpha": alpha, "beta": beta, "gamma": gamma,
            "i_x0": {"alpha,beta": ab, "alpha,gamma": ag, "beta,gamma": bg},
            "indistinguishable": {"alpha,beta": ab == 0, "alpha,gamma": ag == 0,
                                  "beta,gamma": bg == 0},
            "transitive": not (ab == 0 and ag == 0 and bg > 0)}


def find_vis_pattern(system: CurveSystem):
    """First ``(alpha, beta, gamma)`` realising the pattern, or ``None``."""
    for a in system.curves:
        for b, c in itertools.combinations(system.curves, 2):
            if system.i(a, b) == 0 and system.i(a, c) == 0 and system.i(b, c) > 0:
                return (a, b, c)
    return None


def vanishing_report(G: SymbolicFoliation) -> dict:
    """Classify each declared curve against ``G``: vanishing (zero pairing,
    not a core), essential-annulus core, meeting an arational component, or
    crossing only curve components."""
    S = G.system
    T = truncate(G)
    cores = set(T.essential)
    out = {"vanishing": [], "cores": sorted(cores), "meets_arational": [],
           "crosses_curves": [], "arational_supports": sorted(T.supports)}
    for c in S.curves:
        if c in cores:
            continue
        if pairing_zero(S, ("curve", c), T):
            out["vanishing"].append(c)
        elif any(S.relation(c, a) not in ("boundary", "disjoint") for a in T.supports):
            out["meets_arational"].append(c)
        else:
            out["crosses_curves"].append(c)
    return out


# ---------------------------------------------------------------------------
# Shipped systems


def torus_slope_system(height: int = 3) -> CurveSystem:
    """Slopes of height ``<= height`` on the once-punctured torus, one support."""
    from .slopes import slopes_by_height

    sl = slopes_by_height(height)
    names = [str(s) for s in sl]
    M = [[abs(a.p * b.q - b.p * a.q) for b in sl] for a in sl]
    return CurveSystem((1, 1), names, M,
                       [Support("T", 1, (), tuple(names), ())], name="torus-slopes",
                       assumptions=["every curve fills the torus, so the only support is "
                                    "the whole surface"])


def load_system(name: str) -> CurveSystem:
    """``torus`` (auto-generated), ``cx2`` or ``cx3``, or a path to a JSON file."""
    if name in ("torus", "torus-slopes"):
        return torus_slope_system()
    path = DATA_DIR / f"{name}.json"
    if path.exists():
        return CurveSystem.from_json(json.loads(path.read_text()))
    p = Path(name)
    if p.exists():
        return CurveSystem.from_json(json.loads(p.read_text()))
    raise InputError(f"unknown curve system {name!r}")
