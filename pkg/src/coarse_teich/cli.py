"""Command-line experiment driver.

Every subcommand takes its parameters from flags or from a JSON ``--config``
object (flags win).  Exit codes: 0 pass, 1 property violation, 2 input error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance, foliation, inequalities, metric, models, torus
from .errors import InputError
from .slopes import Slope, slopes_by_height

EXIT_PASS, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


@dataclass
class Outcome:
    value: object
    summary: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    passed: bool | None = None


# ---------------------------------------------------------------------------
# Value parsers: each accepts the flag string form and the JSON form


def _split(text, sep=","):
    return [t.strip() for t in str(text).split(sep) if t.strip() != ""]


def p_int(v):
    if isinstance(v, bool):
        raise InputError(f"expected an integer, got {v!r}")
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise InputError(f"expected an integer, got {v!r}") from None
    if not f.is_integer():
        raise InputError(f"expected an integer, got {v!r}")
    return int(f)


def p_float(v):
    if isinstance(v, bool):
        raise InputError(f"expected a number, got {v!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise InputError(f"expected a number, got {v!r}") from None


def p_str(v):
    if not isinstance(v, str):
        raise InputError(f"expected a string, got {v!r}")
    return v


def p_tau(v):
    return torus.as_tau(v)


def p_slope(v):
    return Slope.parse(v)


def p_slopes(v):
    if isinstance(v, str):
        return [Slope.parse(t) for t in _split(v, ";")]
    return [Slope.parse(t) for t in v]


def p_floats(v):
    items = _split(v) if isinstance(v, str) else list(v)
    return [math.inf if str(x).strip().lower() in ("inf", "infinity") else p_float(x)
            for x in items]


def p_strs(v):
    return _split(v) if isinstance(v, str) else [str(x) for x in v]


def p_matrix(v):
    vals = p_floats(v) if isinstance(v, str) else \
        [p_float(x) for row in v for x in (row if isinstance(row, list) else [row])]
    if len(vals) != 4:
        raise InputError(f"matrix needs 4 entries a,b,c,d, got {len(vals)}")
    return [[vals[0], vals[1]], [vals[2], vals[3]]]


def p_dict(v):
    if isinstance(v, str):
        try:
            v = json.loads(v)
        except json.JSONDecodeError as exc:
            raise InputError(f"expected a JSON object: {exc}") from None
    if not isinstance(v, dict):
        raise InputError(f"expected an object, got {v!r}")
    return v


def p_maps(v):
    if isinstance(v, str):
        return _split(v, ";")
    return list(v)


# ---------------------------------------------------------------------------
# Model spaces, points and maps


MODEL_PARAMS = {
    "model": (p_str, "halfplane", "tree | halfplane | halfline | sampled"),
    "b": (p_int, 2, "tree branching"),
    "depth": (p_int, 10, "tree depth"),
    "space": (p_str, None, "sampled space JSON {points, dist, base}"),
}


def build_space(p):
    m = p["model"]
    if m == "tree":
        return models.RootedTree(p["b"], p["depth"])
    if m == "halfplane":
        return models.HalfPlane()
    if m == "halfline":
        return models.HalfLine()
    if m == "sampled":
        if not p.get("space"):
            raise InputError("model 'sampled' needs --space PATH")
        return metric.SampledMetricSpace.from_json(_read_json(p["space"]))
    raise InputError(f"unknown model {m!r}")


def parse_point(space, v):
    if isinstance(space, models.RootedTree):
        if isinstance(v, (list, tuple)):
            return tuple(int(c) for c in v)
        s = str(v).strip()
        if s in ("", "root", "()"):
            return ()
        if not s.isdigit():
            raise InputError(f"tree vertex {v!r} must be a digit string")
        return tuple(int(c) for c in s)
    if isinstance(space, models.HalfPlane):
        return torus.as_tau(v)
    if isinstance(space, models.HalfLine):
        return p_float(v)
    pt = metric._hashable(v) if isinstance(v, list) else v
    if space.contains(pt):
        return pt
    try:
        if space.contains(int(v)):
            return int(v)
    except (TypeError, ValueError):
        pass
    raise InputError(f"{v!r} is not a point of the space")


def parse_boundary(space, v):
    if isinstance(space, models.RootedTree):
        return space.canonical_boundary(parse_point(space, v))
    if isinstance(space, models.HalfLine):
        return math.inf
    if isinstance(space, models.HalfPlane):
        return space.canonical_boundary(p_floats([v])[0] if not isinstance(v, str) else
                                        p_floats(v)[0])
    raise InputError("sampled spaces have no boundary")


REPARAMS = {"square": np.square, "sqrt": np.sqrt, "log1p": np.log1p,
            "double": lambda x: 2 * x}


def build_map(space, spec):
    """``mobius:a,b,c,d`` | ``vperturb:a,b,c,d,amp,seed`` | ``aut:seed`` |
    ``aut-inv:seed`` | ``collapse:digits[,src,dst]`` | ``reparam:name`` |
    ``table:PATH`` | ``identity``."""
    if isinstance(spec, dict):
        return metric.MetricMap.from_json(spec, space)
    kind, _, arg = str(spec).partition(":")
    kind = kind.strip()
    if kind == "identity":
        return metric.MetricMap.identity(space)
    if kind in ("mobius", "vperturb"):
        if not isinstance(space, models.HalfPlane):
            raise InputError(f"{kind} maps need the halfplane model")
        vals = p_floats(arg)
        if kind == "mobius":
            return models.mobius_map(space, p_matrix(vals))
        if len(vals) != 6:
            raise InputError("vperturb needs a,b,c,d,amplitude,seed")
        return models.vertical_perturbation(models.mobius_map(space, p_matrix(vals[:4])),
                                            vals[4], p_int(vals[5]))
    if kind in ("aut", "aut-inv", "collapse"):
        if not isinstance(space, models.RootedTree):
            raise InputError(f"{kind} maps need the tree model")
        if kind == "aut":
            return models.tree_automorphism(space, p_int(arg))
        if kind == "aut-inv":
            return models.tree_automorphism_inverse(space, p_int(arg))
        parts = _split(arg) or [""]
        node = parse_point(space, parts[0])
        src, dst = (p_int(parts[1]), p_int(parts[2])) if len(parts) == 3 else (1, 0)
        return models.tree_branch_collapse(space, node, src, dst)
    if kind == "reparam":
        if not isinstance(space, models.HalfLine):
            raise InputError("reparam maps need the halfline model")
        if arg not in REPARAMS:
            raise InputError(f"unknown reparameterization {arg!r}; choose from {sorted(REPARAMS)}")
        return models.reparameterization(space, REPARAMS[arg], arg)
    if kind == "table":
        return metric.MetricMap.from_json(_read_json(arg), space)
    raise InputError(f"unknown map spec {spec!r}")


def inverse_map(space, spec):
    """Inverse of a ``mobius`` or ``aut`` spec, else ``None``."""
    if not isinstance(spec, str):
        return None
    kind, _, arg = spec.partition(":")
    if kind == "mobius":
        return models.mobius_map(space, models.mobius_inverse(p_matrix(arg)))
    if kind == "aut":
        return models.tree_automorphism_inverse(space, p_int(arg))
    return None


DEFAULT_XIS = "-2,-0.5,0,0.7,1.5,inf"


def build_suite(space, p, rng):
    if isinstance(space, models.HalfPlane):
        return models.halfplane_pair_suite(space, p_floats(p["xis"]), p["length"], p["step"])
    if isinstance(space, models.RootedTree):
        return models.tree_pair_suite(space, _tree_sample(space, p, rng), p["m_star"])
    if isinstance(space, models.HalfLine):
        a = space.ray(math.inf, p["length"], p["step"])
        b = space.ray(math.inf, p["length"], 1.25 * p["step"])
        return [metric.SequencePair(a, b, True, "inf~inf'"),
                metric.SequencePair(a, a, True, "inf~inf")]
    if not p.get("pairs"):
        raise InputError("sampled spaces need --pairs PATH with [{a, b, expected}, ...]")
    out = []
    for k, d in enumerate(_read_json(p["pairs"])):
        if set(d) - {"a", "b", "expected"}:
            raise InputError(f"pair {k} has unknown fields {sorted(set(d) - {'a', 'b', 'expected'})}")
        a = metric.PointSequence(space, [parse_point(space, x) for x in d["a"]])
        b = metric.PointSequence(space, [parse_point(space, x) for x in d["b"]])
        out.append(metric.SequencePair(a, b, d.get("expected"), f"pair{k}"))
    return out


def _tree_sample(space, p, rng):
    if p.get("sample"):
        return [parse_boundary(space, s) for s in p_strs(p["sample"])]
    # random leaves plus copies differing in one early letter, so maps that
    # merge or separate shallow branches meet a witnessing pair
    leaves = set()
    for _ in range(8):
        w = [int(c) for c in rng.integers(0, space.b, space.depth)]
        leaves.add(tuple(w))
        for k in range(min(4, space.depth)):
            for c in range(space.b):
                leaves.add(tuple(w[:k] + [c] + w[k + 1:]))
    return sorted(leaves)


def _boundary_sample(space, p, rng):
    if isinstance(space, models.RootedTree):
        return _tree_sample(space, p, rng)
    if isinstance(space, models.HalfLine):
        return [math.inf]
    return [parse_boundary(space, x) for x in p_strs(p.get("sample") or DEFAULT_XIS)]


def _model_defaults(space, p, ray_m_star=8.0):
    """Thresholds default per model: trees are shallow, rays are long.

    Boundary extension tests a ray's self-profile at half its length, so
    commands that extend maps use a lower ``ray_m_star``.
    """
    tree = isinstance(space, models.RootedTree)
    if p.get("m_star") is None:
        p["m_star"] = 5.0 if tree else ray_m_star
    if p.get("n_star") is None:
        p["n_star"] = min(8, space.depth - 1) if tree else 64
    if p.get("horizon") is None:
        p["horizon"] = space.depth + 1 if tree else 80


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gromov(p):
    X = build_space(p)
    x1, x2 = parse_point(X, p["x1"]), parse_point(X, p["x2"])
    z = parse_point(X, p["z"]) if p.get("z") is not None else None
    v = metric.gromov_product(X, x1, x2, z)
    return Outcome(v, {"value": v})


def cmd_delta(p):
    X = build_space(p)
    if not hasattr(X, "points"):
        raise InputError(f"model {p['model']!r} has no finite point set; use tree or sampled")
    base = parse_point(X, p["base"]) if p.get("base") is not None else None
    v = metric.four_point_delta(X, base)
    return Outcome(v, {"value": v, "points": len(X.points)})


def cmd_profile(p):
    X = build_space(p)
    _model_defaults(X, p)
    if isinstance(X, models.HalfPlane):
        a = X.ray(parse_boundary(X, p["xi1"]), p["horizon"], p["step"])
        start = torus.as_tau(p["start2"]) if p.get("start2") is not None else None
        b = X.ray(parse_boundary(X, p["xi2"]), p["horizon"], p["step"], start=start)
    elif isinstance(X, (models.RootedTree, models.HalfLine)):
        a = X.ray(parse_boundary(X, p["xi1"]), p["horizon"], p["step"])
        b = X.ray(parse_boundary(X, p["xi2"]), p["horizon"], p["step"])
    else:
        raise InputError("profile needs a model with rays")
    prof = metric.profile(a, b)
    n = min(p["n_star"], prof.horizon)
    v = prof[n]
    rows = [{"n": k, "M": m} for k, m in enumerate(prof.tolist())]
    return Outcome(v, {"value": v, "n_star": n, "m_star": p["m_star"],
                       "indistinguishable": prof.indistinguishable(p["m_star"], n),
                       "profile": prof.tolist()}, rows)


def cmd_check_ac(p):
    X = build_space(p)
    _model_defaults(X, p)
    rng = np.random.default_rng(p["seed"])
    omega = build_map(X, p["map"])
    rep = metric.check_ac(omega, build_suite(X, p, rng), p["m_star"], p["n_star"], p["slack"])
    rows = [{"pair": w["pair"], "label": w["label"], "violation": w["violation"],
             "domain_profile": w["domain_profile"], "image_profile": w["image_profile"]}
            for w in rep.witnesses]
    return Outcome(rep.ok, rep.to_dict(), rows, rep.ok)


def cmd_semigroup(p):
    X = build_space(p)
    _model_defaults(X, p)
    rng = np.random.default_rng(p["seed"])
    specs = p_maps(p["maps"])
    maps = [build_map(X, s) for s in specs]
    invs = {k: inv for k, s in enumerate(specs) if (inv := inverse_map(X, s)) is not None}
    rep = metric.semigroup_harness(maps, build_suite(X, p, rng), p["m_star"], p["n_star"],
                                   p["slack"], inverses=invs)
    d = rep.to_dict()
    rows = [{"law": law, "detail": item} for law in
            ("composition_failures", "reflexive_failures", "symmetric_failures",
             "transitive_failures", "inverse_failures") for item in d[law]]
    return Outcome(rep.ok, d, rows, rep.ok)


def cmd_boundary_ext(p):
    X = build_space(p)
    _model_defaults(X, p)
    omega = build_map(X, p["map"])
    e = models.boundary_extension(omega, parse_boundary(X, p["point"]), p["horizon"],
                                  p["m_star"], p["step"])
    rows = [{"n": k, "self_profile": v} for k, v in enumerate(e.self_profile)]
    return Outcome(e.point, {"value": e.point, "converged": e.converged}, rows, e.converged)


def cmd_classify(p):
    X = build_space(p)
    _model_defaults(X, p, ray_m_star=5.0)
    rng = np.random.default_rng(p["seed"])
    omega = build_map(X, p["map"])
    inv = build_map(X, p["inverse"]) if p.get("inverse") else None
    sample = _boundary_sample(X, p, rng)
    suite = build_suite(X, p, rng) if not isinstance(X, metric.SampledMetricSpace) else None
    res = models.classify_map(omega, sample, suite, m_star=p["m_star"], n_star=p["n_star"],
                              horizon=p["horizon"], step=p["step"], inverse=inv,
                              slack=p["slack"])
    label = "AC_as" if res["AC_as"] else "AC" if res["AC"] else "not AC"
    return Outcome(label, res, res["witnesses"])


def cmd_kerckhoff(p):
    t1, t2 = p_tau(p["tau1"]), p_tau(p["tau2"])
    res = torus.kerckhoff_sup(t1, t2, p["qmax"])
    exact = torus.hyp_distance(t1, t2)
    gap = abs(res.distance - exact)
    return Outcome(res.distance, {"value": res.distance, "closed_form": exact, "gap": gap,
                                  "slope": str(res.slope), "ratio": res.ratio},
                   [{"tau1_re": t1.real, "tau1_im": t1.imag, "tau2_re": t2.real,
                     "tau2_im": t2.imag, "kerckhoff": res.distance, "closed_form": exact,
                     "gap": gap}], gap <= p["tol"])


def cmd_ray(p):
    tau0, s = p_tau(p["tau0"]), p_slope(p["slope"])
    e0 = torus.ext_length(tau0, s)
    rows, drift, derr = [], 0.0, 0.0
    for k in range(p["steps"] + 1):
        t = p["t_max"] * k / p["steps"]
        r = torus.teich_ray(tau0, s, t)
        e = torus.ext_length(r, s)
        d = torus.hyp_distance(tau0, r)
        drift = max(drift, abs(e * math.exp(2 * t) / e0 - 1))
        derr = max(derr, abs(d - t))
        rows.append({"t": t, "re": r.real, "im": r.imag, "ext": e, "d_T": d})
    ok = drift <= p["tol"] and derr <= p["tol"]
    return Outcome(rows[-1]["d_T"], {"value": rows[-1]["d_T"], "ext_drift": drift,
                                     "distance_error": derr}, rows, ok)


def cmd_gm_limit(p):
    G = p_slope(p["slope"])
    betas = p_slopes(p["slopes"]) if p.get("slopes") else slopes_by_height(p["height"])
    rep = torus.gm_ray_limit(G, betas, p["t_max"], p["steps"], p["tol"])
    rows = [{"t": t, "gap": g} for t, g in zip(rep.ts, rep.gaps)]
    return Outcome(rep.final_gap, {"value": rep.final_gap, "gap": rep.final_gap,
                                   "converged": rep.converged, "betas": len(betas)},
                   rows, rep.converged)


def cmd_minsky(p):
    if p.get("samples"):
        rng = np.random.default_rng(p["seed"])
        taus = inequalities.random_taus(rng, p["samples"])
        s1 = inequalities.random_slopes(rng, p["samples"], p["height"])
        s2 = inequalities.random_slopes(rng, p["samples"], p["height"])
        cases = list(zip(taus, s1, s2))
    else:
        cases = [(p_tau(p["tau"]), p_slope(p["s1"]), p_slope(p["s2"]))]
    rows, witnesses, worst = [], [], 0.0
    for tau, a, b in cases:
        r = torus.minsky_check(tau, a, b)
        row = {"tau_re": tau.real, "tau_im": tau.imag, "s1": str(a), "s2": str(b),
               "lhs": r.lhs, "rhs": r.rhs, "equality": r.equality, "holds": r.holds}
        rows.append(row)
        worst = max(worst, r.lhs / r.rhs)
        if not r.holds:
            witnesses.append(row)
    return Outcome(worst, {"value": worst, "violations": len(witnesses),
                           "witnesses": witnesses[:20]},
                   witnesses if witnesses else rows, not witnesses)


def cmd_i_x0(p):
    base = p_tau(p["base"])
    if p.get("s1") is not None:
        v = torus.i_x0_boundary(p_slope(p["s1"]), p_slope(p["s2"]), base)
    else:
        v = torus.i_x0(p_tau(p["y"]), p_tau(p["z"]), base)
    return Outcome(v, {"value": v})


def cmd_mcg(p):
    A = p_matrix(p["matrix"])
    tau, s = p_tau(p["tau"]), p_slope(p["slope"])
    img = torus.mcg_act(A, tau)
    s2 = torus.mcg_act_slope(A, s)
    e1, e2 = torus.ext_length(tau, s), torus.ext_length(img, s2)
    rel = abs(e2 - e1) / e1
    return Outcome(img, {"value": img, "slope_image": str(s2), "ext_before": e1,
                         "ext_after": e2, "rel_error": rel,
                         "boundary_image": torus.mcg_act_boundary(A, s.boundary_point)},
                   [{"re": img.real, "im": img.imag, "slope_image": str(s2), "rel_error": rel}],
                   rel <= 1e-9)


def cmd_homothety_nogo(p):
    rows = torus.homothety_divergence(p["K"], torus.default_schedule(p["nmax"]))
    vals = [r["value"] for r in rows]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    every = max(1, p["every"])
    keep = [r for r in rows if r["n"] % every == 0 or r["n"] == p["nmax"]]
    return Outcome(vals[-1], {"value": vals[-1], "monotone": mono, "K": p["K"]}, keep, mono)


def _system(p):
    return foliation.load_system(p["system"])


def _fol(S, v):
    if isinstance(v, dict):
        return foliation.SymbolicFoliation.from_json(S, v)
    return foliation.SymbolicFoliation.parse(S, p_str(v))


def cmd_nullset(p):
    S = _system(p)
    G, H = _fol(S, p["G"]), _fol(S, p["H"])
    rel = foliation.nullset_compare(G, H)
    nG, nH = foliation.null_set(G), foliation.null_set(H)
    rows = [{"object": str(o), "in_N_G": o in nG, "in_N_H": o in nH}
            for o in sorted(nG | nH, key=str)]
    return Outcome(rel, {"value": rel, "absorbed_G_in_H": foliation.absorbed(G, H),
                         "absorbed_H_in_G": foliation.absorbed(H, G),
                         "xi0_G": list(foliation.xi0(G)), "xi0_H": list(foliation.xi0(H))},
                   rows)


def cmd_tower(p):
    S = _system(p)
    idx = foliation.TowerIndex(foliation.generate_family(S))
    if p.get("G"):
        T = foliation.tower_height(_fol(S, p["G"]), idx.family, idx)
        rows = [{"level": k, "foliation": str(G), "xi0": list(foliation.xi0(G))}
                for k, G in enumerate(T.chain)]
        return Outcome(T.height, {"value": T.height, "cx": S.cx}, rows, T.height <= S.cx)
    heights = [len(idx.longest(i)) for i in range(len(idx.family))]
    rows = [{"foliation": str(G), "height": h, "xi0": list(foliation.xi0(G))}
            for G, h in zip(idx.family, heights)]
    top = max(heights)
    return Outcome(top, {"value": top, "cx": S.cx, "classes": len(rows)}, rows, top <= S.cx)


def cmd_vis_experiment(p):
    S = _system(p)
    if p.get("alpha") is None:
        found = foliation.find_vis_pattern(S)
        if found is None:
            raise InputError(f"system {S.name!r} realises no non-transitive pattern")
        a, b, c = found
    else:
        a, b, c = p["alpha"], p["beta"], p["gamma"]
    ext = p_dict(p["ext"]) if p.get("ext") else None
    res = foliation.vis_experiment(S, a, b, c, ext)
    rows = [{"pair": k, "i_x0": v, "indistinguishable": res["indistinguishable"][k]}
            for k, v in res["i_x0"].items()]
    return Outcome("transitive" if res["transitive"] else "non-transitive", res, rows)


def cmd_fills_bound(p):
    alphas = p_slopes(p["alphas"])
    if p["m"] is not None and p["m"] != len(alphas):
        raise InputError(f"m={p['m']} but {len(alphas)} curves given")
    inst = inequalities.FillingInstance(tuple(alphas),
                                        p_slope(p["gamma"]) if p.get("gamma") else None,
                                        (p["g"], p["n"]), p["height"])
    rep = inequalities.verify_fills_bound(inst, p["trials"], p["seed"])
    cols = ("tau_re", "tau_im", "ext_gamma", "bound", "ratio")
    rows = [{k: r[k] for k in cols} for r in rep.rows]
    bad = [r for r in rep.rows if r["ratio"] > 1]
    return Outcome(rep.max_ratio, {"value": rep.max_ratio, "trials": rep.trials,
                                   "witnesses": bad[:20]}, rows, rep.passed)


def cmd_subadd(p):
    s = p_slope(p["slope"])
    F = torus.WeightedMulticurve.single(s, p["wF"])
    G = torus.WeightedMulticurve.single(s, p["wG"])
    rng = np.random.default_rng(p["seed"])
    ys = inequalities.random_taus(rng, p["points"])
    rep = inequalities.subadditivity_check(ys, F, G)
    rows = [{"y_re": y.real, "y_im": y.imag, "lower_gap": lo, "upper_gap": hi}
            for y, lo, hi in zip(ys, rep.lower_gaps, rep.upper_gaps)]
    v = min(min(rep.lower_gaps), min(rep.upper_gaps))
    return Outcome(v, {"value": v, "min_lower_gap": min(rep.lower_gaps),
                       "min_upper_gap": min(rep.upper_gaps)}, rows, rep.passed)


def cmd_cone_ext(p):
    y = p_tau(p["y"])
    slopes = slopes_by_height(p["height"])
    point = p_slope(p["point"]) if p["boundary"] else p_tau(p["point"])
    f = torus.gm_functional(point, slopes).scaled(p["scale"])
    sampled = inequalities.cone_ext_length(y, f, slopes)
    exact = inequalities.cone_ext_length_exact(y, f)
    ok = sampled <= exact * (1 + 1e-9)
    return Outcome(exact, {"value": exact, "sampled": sampled, "exact": exact,
                           "rel_gap": (exact - sampled) / exact}, [], ok)


def cmd_suite(p):
    name = p["name"]
    # progress lines go to stderr when stdout carries a formatted document
    stream = sys.stderr if p.get("format") else sys.stdout
    echo = lambda line: print(line, file=stream)
    if name == "acceptance":
        res = acceptance.run_acceptance(p["seed"], p.get("out"), echo=echo)
        ok = all(r.passed for r in res)
        summary = {"criteria": [{"id": r.id, "name": r.name, "passed": r.passed,
                                 "summary": r.summary} for r in res], "all_pass": ok}
        rows = [{"id": r.id, "name": r.name, "passed": r.passed} for r in res]
        return Outcome("pass" if ok else "fail", summary, rows, ok)
    if name == "regression":
        base = acceptance.load_baselines(p.get("baselines"))
        rows = acceptance.run_regression(base)
        ok = all(r["passed"] for r in rows)
        for r in rows:
            echo(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['quantity']}: observed "
                 f"{r['observed']:.6g}, baseline {r['baseline']:.6g}")
        return Outcome("pass" if ok else "fail", {"entries": rows, "all_pass": ok}, rows, ok)
    raise InputError(f"unknown suite {name!r}; choose acceptance or regression")


# ---------------------------------------------------------------------------
# Parameter tables


SUITE_PARAMS = {
    "xis": (p_str, DEFAULT_XIS, "half-plane boundary points for the pair suite"),
    "length": (p_int, 72, "ray samples per suite sequence"),
    "step": (p_float, 0.2, "ray parameter step"),
    "m_star": (p_float, None, "indistinguishability threshold M*"),
    "n_star": (p_int, None, "profile horizon N*"),
    "slack": (p_float, 0.0, "threshold slack for images"),
    "sample": (p_str, None, "boundary sample (comma separated)"),
    "pairs": (p_str, None, "pair suite JSON for sampled spaces"),
}

COMMANDS = {
    "gromov": (cmd_gromov, "Gromov product", {
        **MODEL_PARAMS, "x1": (p_str, None, "first point"), "x2": (p_str, None, "second point"),
        "z": (p_str, None, "base point (default: the space base)")}),
    "delta": (cmd_delta, "four-point hyperbolicity constant", {
        **MODEL_PARAMS, "base": (p_str, None, "base point")}),
    "profile": (cmd_profile, "indistinguishability profile of two rays", {
        **MODEL_PARAMS, "xi1": (p_str, "inf", "first endpoint"), "xi2": (p_str, "inf", "second endpoint"),
        "start2": (p_str, None, "start of the second ray"), "horizon": (p_int, None, "samples"),
        "step": (p_float, 0.2, "ray step"), "m_star": (p_float, None, "M*"),
        "n_star": (p_int, None, "N*")}),
    "check-ac": (cmd_check_ac, "asymptotic conservativity check", {
        **MODEL_PARAMS, **SUITE_PARAMS, "map": (p_str, "identity", "map spec")}),
    "semigroup": (cmd_semigroup, "composition and closeness laws", {
        **MODEL_PARAMS, **SUITE_PARAMS, "maps": (p_maps, None, "map specs separated by ';'")}),
    "boundary-ext": (cmd_boundary_ext, "boundary extension of a map", {
        **MODEL_PARAMS, "map": (p_str, "identity", "map spec"), "point": (p_str, "inf", "boundary point"),
        "horizon": (p_int, None, "ray samples"), "step": (p_float, 0.2, "ray step"),
        "m_star": (p_float, 5.0, "convergence threshold")}),
    "classify": (cmd_classify, "AC / AC_as / invertibility classification", {
        **MODEL_PARAMS, **SUITE_PARAMS, "map": (p_str, "identity", "map spec"),
        "inverse": (p_str, None, "candidate inverse map spec"),
        "horizon": (p_int, None, "ray samples")}),
    "kerckhoff": (cmd_kerckhoff, "Kerckhoff distance on the torus model", {
        "tau1": (p_str, "0,1", "first point re,im"), "tau2": (p_str, "0,2", "second point re,im"),
        "qmax": (p_int, 10_000, "maximal slope denominator"),
        "tol": (p_float, 1e-6, "allowed gap to the closed form")}),
    "ray": (cmd_ray, "Teichmueller ray samples", {
        "tau0": (p_str, "0,1", "start point"), "slope": (p_str, "1,0", "slope p,q"),
        "t_max": (p_float, 5.0, "final parameter"), "steps": (p_int, 50, "intervals"),
        "tol": (p_float, 1e-9, "ray law tolerance")}),
    "gm-limit": (cmd_gm_limit, "Gardiner-Masur limit along a ray", {
        "slope": (p_str, "1,0", "target slope G"), "slopes": (p_slopes, None, "test slopes"),
        "height": (p_int, 5, "test slopes of height <= h when --slopes is absent"),
        "t_max": (p_float, 8.0, "final parameter"), "steps": (p_int, 8, "samples"),
        "tol": (p_float, 1e-3, "convergence tolerance")}),
    "minsky": (cmd_minsky, "Minsky inequality", {
        "tau": (p_str, "0,1", "point"), "s1": (p_str, "1,0", "first slope"),
        "s2": (p_str, "0,1", "second slope"), "samples": (p_int, None, "random samples"),
        "height": (p_int, 30, "slope height for random samples")}),
    "i-x0": (cmd_i_x0, "boundary pairing", {
        "y": (p_str, "0,1", "interior point"), "z": (p_str, "0,2", "interior point"),
        "s1": (p_str, None, "first slope"), "s2": (p_str, None, "second slope"),
        "base": (p_str, "0,1", "base point")}),
    "mcg": (cmd_mcg, "mapping-class action", {
        "matrix": (p_str, "1,1,0,1", "a,b,c,d"), "tau": (p_str, "0,1", "point"),
        "slope": (p_str, "1,0", "slope")}),
    "homothety-nogo": (cmd_homothety_nogo, "rough homothety divergence table", {
        "K": (p_float, 2.0, "homothety factor"), "nmax": (p_int, 10_000, "last n"),
        "every": (p_int, 1, "keep every k-th row")}),
    "nullset": (cmd_nullset, "null-set comparison", {
        "system": (p_str, "cx2", "curve system name or path"),
        "G": (p_str, None, "foliation, e.g. 'A:Y + E:d'"), "H": (p_str, None, "foliation")}),
    "tower": (cmd_tower, "adherence tower heights", {
        "system": (p_str, "cx2", "curve system name or path"),
        "G": (p_str, None, "foliation (default: whole family)")}),
    "vis-experiment": (cmd_vis_experiment, "non-transitivity pattern", {
        "system": (p_str, "cx2", "curve system"), "alpha": (p_str, None, "curve"),
        "beta": (p_str, None, "curve"), "gamma": (p_str, None, "curve"),
        "ext": (p_dict, None, "base extremal lengths as JSON")}),
    "fills-bound": (cmd_fills_bound, "filling extremal-length bound", {
        "g": (p_int, 1, "genus"), "n": (p_int, 1, "punctures"), "m": (p_int, None, "curve count"),
        "alphas": (p_slopes, "1,0;0,1", "filling curves"), "gamma": (p_str, None, "target slope"),
        "trials": (p_int, 10_000, "random points"), "height": (p_int, 50, "random gamma height")}),
    "subadd": (cmd_subadd, "subadditivity of the pairing", {
        "slope": (p_str, "1,0", "common slope"), "wF": (p_float, 1.0, "weight of F"),
        "wG": (p_float, 2.0, "weight of G"), "points": (p_int, 100, "sample points")}),
    "cone-ext": (cmd_cone_ext, "extremal length of a cone point", {
        "y": (p_str, "0.3,1.5", "point"), "point": (p_str, "0.5,2", "cone point (tau or slope)"),
        "boundary": (p_int, 0, "1 if --point is a slope"), "scale": (p_float, 1.0, "cone scale"),
        "height": (p_int, 20, "slope height")}),
    "suite": (cmd_suite, "acceptance or regression suite", {
        "baselines": (p_str, None, "baseline JSON for the regression suite")}),
}

ALIASES = {"max_denominator": "qmax"}


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarse-teich", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_, params) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        if name == "suite":
            sp.add_argument("name", choices=["acceptance", "regression"])
        for key, (_, default, h) in params.items():
            sp.add_argument(_flag(key), dest=key, default=None,
                            help=f"{h} (default: {default})")
        sp.add_argument("--config", help="JSON object of parameters")
        sp.add_argument("--seed", type=int, default=None, help="random seed (default: 0)")
        sp.add_argument("--out", help="write artifacts here (a directory for suites)")
        sp.add_argument("--format", choices=["csv", "json"], default=None,
                        help="output format (default: plain value on stdout, json with --out)")
    return parser


def _line_of(text: str, key: str) -> int:
    for k, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return k
    return 1


def load_config(path: str, params: dict) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}:1: config must be a JSON object")
    out = {}
    allowed = set(params) | {"seed", "out", "format"} | set(ALIASES)
    for key, val in doc.items():
        if key not in allowed:
            raise InputError(f"{path}:{_line_of(text, key)}: unknown field {key!r}; "
                             f"allowed: {', '.join(sorted(allowed))}")
        target = ALIASES.get(key, key)
        try:
            if target in params:
                conv = params[target][0]
                # structured values (lists, objects) pass through to the consumer
                out[target] = val if conv is p_str and not isinstance(val, str) else conv(val)
            elif target == "seed":
                out[target] = p_int(val)
            elif target == "format":
                if val not in ("csv", "json"):
                    raise InputError(f"format must be csv or json, got {val!r}")
                out[target] = val
            else:
                out[target] = p_str(val)
        except InputError as exc:
            raise InputError(f"{path}:{_line_of(text, key)}: field {key!r}: {exc}") from None
    return out


def resolve(args, params: dict) -> dict:
    """Merge defaults, config and flags (flags win) and convert values."""
    cfg = load_config(args.config, params) if args.config else {}
    p = {}
    for key, (conv, default, _) in params.items():
        raw = getattr(args, key)
        if raw is not None:
            try:
                p[key] = conv(raw)
            except InputError as exc:
                raise InputError(f"{_flag(key)}: {exc}") from None
        elif key in cfg:
            p[key] = cfg[key]
        else:
            p[key] = conv(default) if default is not None and conv not in (p_str,) else default
    p["seed"] = args.seed if args.seed is not None else cfg.get("seed", 0)
    p["out"] = args.out if args.out is not None else cfg.get("out")
    p["format"] = args.format if args.format is not None else cfg.get("format")
    return p


def config_hash(command: str, p: dict) -> str:
    doc = {"command": command, **{k: v for k, v in p.items() if k not in ("out", "format")}}
    blob = json.dumps(acceptance.jsonable(_plain(doc)), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _plain(obj):
    if isinstance(obj, Slope):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    if isinstance(v, complex):
        return f"{v.real:.6g},{v.imag:.6g}"
    if isinstance(v, tuple):
        return "".join(map(str, v)) or "root"
    return str(v)


def render(command: str, p: dict, out: Outcome, fmt: str) -> str:
    if fmt == "csv":
        rows = out.rows or [{"value": _fmt(out.value)}]
        rows = [{k: json.dumps(acceptance.jsonable(_plain(v)), sort_keys=True)
                 if isinstance(v, (list, dict, tuple)) else acceptance.jsonable(_plain(v))
                 for k, v in r.items()} for r in rows]
        return acceptance.rows_to_csv(rows)
    doc = {"command": command, "config": _plain({k: v for k, v in p.items()
                                                 if k not in ("out", "format")}),
           "config_hash": config_hash(command, p), "passed": out.passed,
           **_plain(out.summary)}
    doc.setdefault("value", _plain(out.value))
    return json.dumps(acceptance.jsonable(doc), sort_keys=True, indent=1) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, _, params = COMMANDS[args.command]
    try:
        p = resolve(args, params)
        if args.command == "suite":
            p["name"] = args.name
        result = handler(p)
        fmt = p["format"]
        if args.command == "suite":
            # artifacts already went to the --out directory
            if fmt:
                sys.stdout.write(render(args.command, p, result, fmt))
            else:
                print(_fmt(result.value))
        elif p["out"]:
            Path(p["out"]).write_text(render(args.command, p, result, fmt or "json"))
            print(_fmt(result.value))
        elif fmt:
            sys.stdout.write(render(args.command, p, result, fmt))
        else:
            print(_fmt(result.value))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if result.passed is False:
        print("property violated; see witness rows", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
