"""Acceptance and regression suites.

Each criterion is a function ``seed -> CriterionResult``.  Results carry a
deterministic summary and artifact rows; wall-clock timings are kept apart
so repeated runs with one seed serialise to identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import torus
from .errors import InputError
from .foliation import TowerIndex, find_vis_pattern, generate_family, load_system, \
    vis_experiment, xi0
from .inequalities import FillingInstance, random_slopes, random_taus, verify_fills_bound
from .metric import SampledMetricSpace, check_ac, four_point_delta, semigroup_harness
from .models import HalfPlane, RootedTree, classify_map, halfplane_pair_suite, mobius_inverse, \
    mobius_map, tree_automorphism, tree_automorphism_inverse, tree_branch_collapse, \
    tree_pair_suite, vertical_perturbation
from .slopes import Slope


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    summary: dict
    rows: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.id:2d} {self.name}"


def _rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), k])


def jsonable(obj):
    """Recursively replace non-finite floats and tuples for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# ---------------------------------------------------------------------------
# Torus criteria


def _random_tau_pair(rng, dmax):
    while True:
        x = rng.uniform(-1.5, 1.5, 2)
        y = np.exp(rng.uniform(-1.5, 1.5, 2))
        t1, t2 = complex(x[0], y[0]), complex(x[1], y[1])
        if torus.hyp_distance(t1, t2) <= dmax:
            return t1, t2


def crit_kerckhoff(seed: int, n_pairs: int = 100, qmax: int = 10_000,
                   tol: float = 1e-6, time_limit: float = 5.0) -> CriterionResult:
    rng = _rng(seed, 1)
    pairs = [_random_tau_pair(rng, 2.0) for _ in range(n_pairs)]
    rows = []
    start = time.perf_counter()
    for t1, t2 in pairs:
        res = torus.kerckhoff_sup(t1, t2, qmax)
        exact = torus.hyp_distance(t1, t2)
        rows.append({"tau1_re": t1.real, "tau1_im": t1.imag, "tau2_re": t2.real,
                     "tau2_im": t2.imag, "kerckhoff": res.distance, "closed_form": exact,
                     "slope": str(res.slope), "gap": abs(res.distance - exact)})
    elapsed = time.perf_counter() - start
    worst = max(r["gap"] for r in rows)
    return CriterionResult(1, "Kerckhoff sup matches the closed-form distance",
                           worst <= tol and elapsed < time_limit,
                           {"pairs": n_pairs, "qmax": qmax, "max_gap": worst, "tol": tol,
                            "time_limit_s": time_limit}, rows, {"seconds": elapsed})


def _equality_case(rng):
    """``tau`` making ``(p1 + q1 tau) conj(p2 + q2 tau)`` purely imaginary."""
    while True:
        p1, p2 = (int(v) for v in rng.integers(-20, 21, 2))
        q1, q2 = (int(v) for v in rng.integers(1, 21, 2))
        if math.gcd(p1, q1) != 1 or math.gcd(p2, q2) != 1 or p1 * q2 == p2 * q1:
            continue
        x1, x2 = sorted((-p1 / q1, -p2 / q2))
        x = x1 + (x2 - x1) * rng.uniform(0.05, 0.95)
        y2 = -(p1 + q1 * x) * (p2 + q2 * x) / (q1 * q2)
        if y2 > 0:
            return complex(x, math.sqrt(y2)), Slope(p1, q1), Slope(p2, q2)


def crit_minsky(seed: int, n_samples: int = 100_000, n_equal: int = 1000,
                rel: float = 1e-12) -> CriterionResult:
    rng = _rng(seed, 2)
    taus = random_taus(rng, n_samples)
    s1 = random_slopes(rng, n_samples, 30)
    s2 = random_slopes(rng, n_samples, 30)
    violations, worst = [], 0.0
    check = torus.minsky_check  # looked up at call time so it can be swapped in tests
    for k in range(n_samples):
        r = check(taus[k], s1[k], s2[k])
        if r.rhs > 0:
            worst = max(worst, r.lhs / r.rhs)
        if not r.lhs <= r.rhs * (1 + rel):
            violations.append({"tau": [taus[k].real, taus[k].imag], "s1": str(s1[k]),
                               "s2": str(s2[k]), "lhs": r.lhs, "rhs": r.rhs})
    rows, eq_fail, ctl_fail = [], 0, 0
    for _ in range(n_equal):
        tau, a, b = _equality_case(rng)
        r = check(tau, a, b)
        ok = r.equality and abs(r.lhs - r.rhs) <= 1e-9 * r.rhs
        # moving off the equality locus must clear the flag
        ctl = check(complex(tau.real, 1.5 * tau.imag), a, b)
        cok = (not ctl.equality) and ctl.lhs <= ctl.rhs * (1 + rel)
        eq_fail += not ok
        ctl_fail += not cok
        rows.append({"tau_re": tau.real, "tau_im": tau.imag, "s1": str(a), "s2": str(b),
                     "lhs": r.lhs, "rhs": r.rhs, "equality": r.equality,
                     "control_equality": ctl.equality})
    passed = not violations and eq_fail == 0 and ctl_fail == 0
    return CriterionResult(2, "Minsky inequality and equality locus", passed,
                           {"samples": n_samples, "violations": len(violations),
                            "witnesses": violations[:5], "max_lhs_over_rhs": worst,
                            "equality_cases": n_equal, "equality_failures": eq_fail,
                            "control_failures": ctl_fail}, rows)


def crit_ray_law(seed: int, n_slopes: int = 20, tol: float = 1e-9) -> CriterionResult:
    rng = _rng(seed, 3)
    slopes = [Slope(1, 0), Slope(0, 1)]
    for s in random_slopes(rng, 10 * n_slopes, 12):
        if len(slopes) == n_slopes:
            break
        if s not in slopes:
            slopes.append(s)
    ts = np.linspace(0.0, 5.0, 51)
    rows = []
    for s in slopes:
        tau0 = complex(rng.uniform(-1, 1), math.exp(rng.uniform(-1, 1)))
        e0 = torus.ext_length(tau0, s)
        drift = dist = 0.0
        for t in ts:
            r = torus.teich_ray(tau0, s, float(t))
            drift = max(drift, abs(torus.ext_length(r, s) * math.exp(2 * t) / e0 - 1))
            dist = max(dist, abs(torus.hyp_distance(tau0, r) - t))
        rows.append({"slope": str(s), "tau0_re": tau0.real, "tau0_im": tau0.imag,
                     "ext_drift": drift, "distance_error": dist})
    md = max(r["ext_drift"] for r in rows)
    mt = max(r["distance_error"] for r in rows)
    return CriterionResult(3, "Teichmueller ray law", md <= tol and mt <= tol,
                           {"slopes": len(slopes), "max_ext_drift": md,
                            "max_distance_error": mt, "tol": tol}, rows)


def crit_gm_limit(seed: int, n_g: int = 10, n_beta: int = 50, t: float = 8.0,
                  tol: float = 1e-3) -> CriterionResult:
    rng = _rng(seed, 4)
    gs = []
    for s in [Slope(1, 0)] + random_slopes(rng, 20 * n_g, 6):
        if len(gs) == n_g:
            break
        if s not in gs:
            gs.append(s)
    betas = []
    for s in random_slopes(rng, 20 * n_beta, 10):
        if len(betas) == n_beta:
            break
        if s not in betas:
            betas.append(s)
    rows = []
    for g in gs:
        rep = torus.gm_ray_limit(g, betas, t_max=t, steps=8, tol=tol)
        rows.append({"G": str(g), "t": t, "gap": rep.final_gap, "converged": rep.converged})
    worst = max(r["gap"] for r in rows)
    return CriterionResult(4, "Gardiner-Masur convergence along rays", worst <= tol,
                           {"G": len(gs), "betas": len(betas), "t": t, "max_gap": worst,
                            "tol": tol}, rows)


def crit_homothety(seed: int, K: float = 2.0, nmax: int = 10_000,
                   threshold: float = 1e3) -> CriterionResult:
    rows = torus.homothety_divergence(K, torus.default_schedule(nmax))
    vals = [r["value"] for r in rows]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    final = vals[-1]
    keep = [r for r in rows if r["n"] % 500 == 0 or r["n"] == nmax]
    return CriterionResult(5, "Rough homothety no-go divergence", mono and final >= threshold,
                           {"K": K, "nmax": nmax, "final_value": final, "monotone": mono,
                            "threshold": threshold}, keep)


# ---------------------------------------------------------------------------
# Coarse geometry criteria


def _grid_space(side: int) -> SampledMetricSpace:
    pts = [(i, j) for i in range(side) for j in range(side)]
    a = np.array(pts, dtype=float)
    d = np.sqrt(((a[:, None, :] - a[None, :, :]) ** 2).sum(-1))
    return SampledMetricSpace(pts, d, (0, 0), validate=False)


def _random_space(rng) -> SampledMetricSpace:
    n = int(rng.integers(8, 25))
    dim = int(rng.integers(1, 4))
    a = rng.normal(size=(n, dim))
    d = np.sqrt(((a[:, None, :] - a[None, :, :]) ** 2).sum(-1))
    return SampledMetricSpace(range(n), d, 0)


def crit_hyperbolicity(seed: int) -> CriterionResult:
    rng = _rng(seed, 6)
    tree_delta = four_point_delta(RootedTree(2, 8))
    rows, exact_ok, rel_worst = [], True, 0.0
    for k in range(20):
        X = _random_space(rng)
        d0 = four_point_delta(X)
        # power-of-two factors commute exactly with every floating-point step
        lam2 = 2.0 ** int(rng.choice([-5, -3, -1, 1, 2, 4]))
        ok = four_point_delta(X.scaled(lam2)) == lam2 * d0
        lam = float(np.exp(rng.uniform(-3, 3)))
        # relative to the scaled diameter: delta itself can be pure round-off
        rel = abs(four_point_delta(X.scaled(lam)) - lam * d0) / (lam * float(X.dist.max()))
        exact_ok &= ok
        rel_worst = max(rel_worst, rel)
        rows.append({"space": k, "n": len(X.points), "delta": d0, "pow2_factor": lam2,
                     "pow2_exact": ok, "factor": lam, "rel_error": rel})
    g8, g32 = four_point_delta(_grid_space(8)), four_point_delta(_grid_space(32))
    passed = tree_delta == 0.0 and exact_ok and rel_worst <= 1e-12 and g32 >= 2 * g8
    return CriterionResult(6, "Four-point hyperbolicity", passed,
                           {"tree_delta": tree_delta, "scaling_exact": exact_ok,
                            "scaling_max_rel_error": rel_worst, "grid8_delta": g8,
                            "grid32_delta": g32, "grid_ratio": g32 / g8}, rows)


def _random_isometry(rng, dmax=1.5):
    while True:
        x, y = rng.uniform(-1.5, 1.5), math.exp(rng.uniform(-1.5, 1.5))
        if torus.hyp_distance(1j, complex(x, y)) <= dmax:
            break
    th = rng.uniform(0, 2 * math.pi)
    c, s = math.cos(th), math.sin(th)
    T = np.array([[math.sqrt(y), x / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])
    A = T @ np.array([[c, s], [-s, c]])
    if rng.uniform() < 0.2:
        A = A @ np.diag([-1.0, 1.0])
    return A


def crit_mobius_laws(seed: int, n_maps: int = 50, m_star: float = 8.0, n_star: int = 64,
                     slack: float = 1.0, amplitude: float = 0.5) -> CriterionResult:
    rng = _rng(seed, 7)
    H = HalfPlane()
    mats = [_random_isometry(rng) for _ in range(n_maps)]
    isos = [mobius_map(H, A, f"iso{k}") for k, A in enumerate(mats)]
    invs = [mobius_map(H, mobius_inverse(A), f"iso{k}^-1") for k, A in enumerate(mats)]
    perts = [vertical_perturbation(f, amplitude, seed=k) for k, f in enumerate(isos)]
    disp = max(H.distance(1j, complex(f.func(1j))) for f in isos)
    suite = halfplane_pair_suite(H, [-2.0, -0.5, 0.0, 0.7, 1.5, math.inf], length=72, step=0.2)
    rows, failures = [], []
    for f in isos + invs + perts:
        rep = check_ac(f, suite, m_star, n_star, slack)
        rows.append({"map": f.name, "AC": rep.ok, "tag_mismatches": len(rep.tag_mismatches)})
        if not rep.ok or rep.tag_mismatches:
            failures.append(f.name)
    n = len(isos)
    rep = semigroup_harness(isos + perts, suite, m_star, n_star, slack,
                            inverses={k: invs[k] for k in range(n)},
                            compose_pairs=[(i, j) for i in range(n) for j in range(n)])
    # closeness must be exactly "same isometry up to perturbation"
    expected_close = 4 * n
    passed = (not failures and rep.ok and rep.n_compositions == n * n
              and rep.n_close_pairs == expected_close and disp <= 1.5)
    return CriterionResult(7, "Moebius isometry laws at sample scale", passed,
                           {"maps": n, "max_displacement": disp, "m_star": m_star,
                            "n_star": n_star, "slack": slack, "ac_failures": failures,
                            "compositions": rep.n_compositions,
                            "composition_failures": len(rep.composition_failures),
                            "close_pairs": rep.n_close_pairs,
                            "expected_close_pairs": expected_close,
                            "reflexive_failures": rep.reflexive_failures,
                            "symmetric_failures": rep.symmetric_failures,
                            "transitive_failures": rep.transitive_failures[:5],
                            "inverse_failures": len(rep.inverse_failures)}, rows)


def crit_tree_classes(seed: int, depth: int = 12, m_star: float = 5.0,
                      n_star: int = 8) -> CriterionResult:
    rng = _rng(seed, 8)
    T = RootedTree(2, depth)
    nodes = [(), (0,), (1,), (0, 1), (1, 0, 1)]
    sample = set()
    for node in nodes:
        for c in (0, 1):
            sample.add(node + (c,) + (0,) * (depth - len(node) - 1))
    while len(sample) < 26:
        sample.add(tuple(int(v) for v in rng.integers(0, 2, depth)))
    sample = sorted(sample)
    suite = tree_pair_suite(T, sample, m_star)
    rows, ok_aut, ok_col = [], True, True
    for s in range(20):
        f, g = tree_automorphism(T, s), tree_automorphism_inverse(T, s)
        c = classify_map(f, sample, suite, m_star=m_star, n_star=n_star, inverse=g)
        good = c["AC"] and c["AC_as"] and c["AC_inv_candidate"] is True
        ok_aut &= good
        rows.append({"map": f.name, "AC": c["AC"], "AC_as": c["AC_as"],
                     "AC_inv_candidate": c["AC_inv_candidate"], "witnesses": len(c["witnesses"])})
    for node in nodes:
        f = tree_branch_collapse(T, node)
        c = classify_map(f, sample, suite, m_star=m_star, n_star=n_star)
        kinds = sorted({w["kind"] for w in c["witnesses"]})
        good = not c["AC"] and "non-injective" in kinds
        ok_col &= good
        rows.append({"map": f.name, "AC": c["AC"], "AC_as": c["AC_as"],
                     "AC_inv_candidate": c["AC_inv_candidate"], "witnesses": len(c["witnesses"]),
                     "witness_kinds": ",".join(kinds)})
    return CriterionResult(8, "Tree automorphisms versus branch collapses", ok_aut and ok_col,
                           {"depth": depth, "m_star": m_star, "n_star": n_star,
                            "sample": len(sample), "automorphisms_ok": ok_aut,
                            "collapses_ok": ok_col}, rows)


# ---------------------------------------------------------------------------
# Symbolic criteria


def crit_towers(seed: int) -> CriterionResult:
    rows, summary, passed = [], {}, True
    for name in ("cx2", "cx3"):
        S = load_system(name)
        idx = TowerIndex(generate_family(S))
        heights = [len(idx.longest(i)) for i in range(len(idx.family))]
        top = max(heights)
        at_top = [idx.family[i] for i, h in enumerate(heights) if h == top]
        singles = all(not G.supports and len(G.essential) == 1 for G in at_top)
        mono = True
        for i in range(len(idx.family)):
            for chain in idx.maximal_towers(i):
                vals = [xi0(idx.family[k]) for k in chain]
                mono &= all(b > a for a, b in zip(vals, vals[1:]))
        ok = top == S.cx and singles and mono
        passed &= ok
        summary[name] = {"cx": S.cx, "classes": len(idx.family), "max_height": top,
                         "top_only_single_curves": singles, "xi0_increasing": mono}
        for G, h in zip(idx.family, heights):
            rows.append({"system": name, "foliation": str(G), "height": h,
                         "xi0": list(xi0(G))})
    return CriterionResult(9, "Null-set towers reach the complexity", passed, summary, rows)


def crit_vis(seed: int) -> CriterionResult:
    S = load_system("cx2")
    res = vis_experiment(S, "d", "a", "b")
    scaled = vis_experiment(S, "d", "a", "b", {"d": 4.0, "a": 0.25, "b": 9.0})
    pattern = (res["indistinguishable"]["alpha,beta"] and res["indistinguishable"]["alpha,gamma"]
               and not res["indistinguishable"]["beta,gamma"] and not res["transitive"])
    stable = scaled["indistinguishable"] == res["indistinguishable"]
    T = load_system("torus")
    torus_none = find_vis_pattern(T) is None
    try:
        vis_experiment(T, "(1,0)", "(0,1)", "(1,1)")
        torus_raises = False
    except InputError:
        torus_raises = True
    found = find_vis_pattern(S)
    return CriterionResult(10, "Non-transitive indistinguishability pattern",
                           pattern and stable and torus_none and torus_raises,
                           {"cx2": res, "cx2_pattern": pattern, "scaling_stable": stable,
                            "cx2_first_pattern": list(found) if found else None,
                            "torus_pattern": None if torus_none else "found",
                            "torus_raises": torus_raises})


def crit_fills(seed: int, trials: int = 10_000) -> CriterionResult:
    inst = FillingInstance(((1, 0), (0, 1)))
    rep = verify_fills_bound(inst, trials, seed)
    worst = max(rep.rows, key=lambda r: r["ratio"])
    return CriterionResult(11, "Filling extremal-length bound", rep.passed,
                           {"trials": trials, "max_ratio": rep.max_ratio, "worst": worst},
                           rep.rows[:200])


CRITERIA = [crit_kerckhoff, crit_minsky, crit_ray_law, crit_gm_limit, crit_homothety,
            crit_hyperbolicity, crit_mobius_laws, crit_tree_classes, crit_towers, crit_vis,
            crit_fills]


# ---------------------------------------------------------------------------
# Artifacts and the suite runner


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    w = csv.DictWriter(buf, fieldnames=keys or ["empty"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: jsonable(v) for k, v in r.items()})
    return buf.getvalue()


def artifacts(results: list[CriterionResult], seed: int) -> dict[str, bytes]:
    """File name to bytes; timings are excluded so output depends on ``seed`` only."""
    summary = {"seed": seed, "all_pass": all(r.passed for r in results),
               "criteria": [{"id": r.id, "name": r.name, "passed": r.passed,
                             "summary": r.summary} for r in results]}
    out = {"summary.json": (json.dumps(jsonable(summary), sort_keys=True, indent=1)
                            + "\n").encode()}
    for r in results:
        if r.rows:
            out[f"criterion_{r.id:02d}.csv"] = rows_to_csv(r.rows).encode()
    return out


def crit_determinism(seed: int, first: dict[str, bytes]) -> CriterionResult:
    second = artifacts([c(seed) for c in CRITERIA], seed)
    diff = sorted(k for k in set(first) | set(second) if first.get(k) != second.get(k))
    return CriterionResult(12, "Byte-identical artifacts for a fixed seed", not diff,
                           {"files": len(first), "differing": diff})


def run_acceptance(seed: int = 0, out_dir=None, determinism: bool = True,
                   echo=None) -> list[CriterionResult]:
    """Run every criterion; optionally write artifacts to ``out_dir``."""
    results = []
    for c in CRITERIA:
        r = c(seed)
        results.append(r)
        if echo:
            echo(r.line())
    arts = artifacts(results, seed)
    if determinism:
        r = crit_determinism(seed, arts)
        results.append(r)
        if echo:
            echo(r.line())
        arts = artifacts(results, seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, data in arts.items():
            (out / name).write_bytes(data)
    return results


# ---------------------------------------------------------------------------
# Regression baselines


def load_baselines(path=None) -> dict:
    if path is None:
        text = resources.files("coarse_teich").joinpath("data/baselines.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def observed_maxima(seed: int) -> dict:
    """Observed worst-case quantities whose drift the regression suite watches."""
    fills = crit_fills(seed)
    minsky = crit_minsky(seed, n_samples=10_000, n_equal=100)
    kerck = crit_kerckhoff(seed, n_pairs=20)
    gm = crit_gm_limit(seed)
    return {"fills_max_ratio": fills.summary["max_ratio"],
            "minsky_max_lhs_over_rhs": minsky.summary["max_lhs_over_rhs"],
            "kerckhoff_max_gap": kerck.summary["max_gap"],
            "gm_max_gap": gm.summary["max_gap"]}


def run_regression(baselines: dict | None = None) -> list[dict]:
    """Compare observed maxima with stored baselines within each declared drift.

    Each entry has ``value`` and either ``rel_drift`` or ``abs_drift``.
    """
    base = baselines or load_baselines()
    obs = observed_maxima(int(base["seed"]))
    rows = []
    for key, spec in sorted(base["entries"].items()):
        if key not in obs:
            raise InputError(f"unknown baseline entry {key!r}")
        ref, val = float(spec["value"]), obs[key]
        tol = float(spec["abs_drift"]) if "abs_drift" in spec else \
            float(spec["rel_drift"]) * abs(ref)
        rows.append({"quantity": key, "baseline": ref, "observed": val,
                     "allowed": tol, "passed": abs(val - ref) <= tol})
    return rows
