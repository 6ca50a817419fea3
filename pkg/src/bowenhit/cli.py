"""Experiment runner: ``bowenhit --config exp.json --out results/``.

The config is one JSON document (see README). Every experiment writes
CSV files, a ``meta.json`` sidecar and a ``report.json``; the exit status
is 0 on pass, 2 on a tolerance failure and 1 on a usage error.
"""

import argparse
from dataclasses import dataclass, field
import json
import math
import os
import sys as _sys
import time

import numpy as np

from . import hitting, measure, oracle, symbolic, tower
from .survival import default_grid, dkw_bound
from .systems import SystemDescriptor, SystemKind, ShiftPoint, sample_invariant

KINDS = ("entry-law", "return-law", "oracle-compare", "kac", "entropy", "mixing-scan",
         "phi-scan", "tower-law", "bound-eval")

TOP_KEYS = {"kind", "system", "target", "targets", "M", "horizon", "seed", "params", "tower",
            "alpha", "tolerance", "bound", "label"}
PARAM_KEYS = {"eta", "beta", "Delta", "C_prime", "gamma", "i_max", "grid", "burn_in",
              "n_orbits", "n_points", "k_max", "k_fit", "L", "deltas", "N_values", "f",
              "occupancy_samples", "occupancy_steps"}
TOWER_KEYS = {"lambda_tail", "i_max", "gamma"}
BOUND_KEYS = {"theta", "t", "s", "lambda", "f", "mu_ball", "mu_inner", "N", "alpha_at_N",
              "C5", "C6"}

DEFAULT_TOLERANCE = {"entry-law": 0.02, "return-law": 0.03, "tower-law": 0.05,
                     "entropy": 0.20, "mixing-scan": 0.20}


class ConfigError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# ------------------------------------------------------------------ validation

def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _check_range(errors, where, v, lo, hi, *, lo_open=True, hi_open=True, integer=False):
    if integer and not _is_int(v):
        errors.append(f"{where}: expected an integer, got {v!r}")
        return
    if not _is_num(v):
        errors.append(f"{where}: expected a number, got {v!r}")
        return
    below = lo is not None and (v <= lo if lo_open else v < lo)
    above = hi is not None and (v >= hi if hi_open else v > hi)
    if below or above:
        lb = "(" if lo_open else "["
        rb = ")" if hi_open else "]"
        lo_s = "-inf" if lo is None else _fmt_bound(lo)
        hi_s = "inf" if hi is None else _fmt_bound(hi)
        errors.append(f"{where}={v!r} outside the admissible range {lb}{lo_s},{hi_s}{rb}")


def _fmt_bound(x):
    if x == 0.5:
        return "½"
    return repr(x)


def validate(cfg):
    """Return a list of every problem in ``cfg`` (empty when valid)."""
    errors = []
    if not isinstance(cfg, dict):
        return ["config must be a JSON object"]
    for k in sorted(set(cfg) - TOP_KEYS):
        errors.append(f"unknown key {k!r}")
    kind = cfg.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    if kind not in ("tower-law", "bound-eval"):
        sysc = cfg.get("system")
        if not isinstance(sysc, dict):
            errors.append("system: required object")
        else:
            errors.extend(_validate_system(sysc))
    if "M" in cfg:
        _check_range(errors, "M", cfg["M"], 1, None, lo_open=False, integer=True)
    if "horizon" in cfg:
        _check_range(errors, "horizon", cfg["horizon"], 1, None, lo_open=False, integer=True)
    if "seed" in cfg:
        _check_range(errors, "seed", cfg["seed"], 0, 2 ** 64, lo_open=False, integer=True)
    if "tolerance" in cfg:
        _check_range(errors, "tolerance", cfg["tolerance"], 0, None)
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        errors.append("params: expected an object")
        params = {}
    for k in sorted(set(params) - PARAM_KEYS):
        errors.append(f"unknown key 'params.{k}'")
    p = params
    if "eta" in p:
        _check_range(errors, "params.eta", p["eta"], 0, 0.5)
    if "beta" in p:
        _check_range(errors, "params.beta", p["beta"], 0, 1)
    if "Delta" in p:
        _check_range(errors, "params.Delta", p["Delta"], 0, None, lo_open=False, integer=True)
    if "C_prime" in p:
        _check_range(errors, "params.C_prime", p["C_prime"], 0, 1)
    if "gamma" in p:
        _check_range(errors, "params.gamma", p["gamma"], 0, 1)
    for key, lo in (("i_max", 2), ("burn_in", 0), ("n_orbits", 1), ("n_points", 1),
                    ("k_max", 1), ("L", 1), ("f", 1), ("occupancy_samples", 1),
                    ("occupancy_steps", 0)):
        if key in p:
            _check_range(errors, f"params.{key}", p[key], lo, None, lo_open=False, integer=True)
    if "grid" in p:
        g = p["grid"]
        if not (isinstance(g, dict) and set(g) <= {"n", "lo", "hi"}):
            errors.append("params.grid: expected {n, lo, hi}")
        else:
            n, lo, hi = g.get("n", 200), g.get("lo", 0.01), g.get("hi", 10.0)
            _check_range(errors, "params.grid.n", n, 2, None, lo_open=False, integer=True)
            if not (_is_num(lo) and _is_num(hi) and 0 < lo < hi):
                errors.append("params.grid: need 0 < lo < hi")
    if "k_fit" in p:
        kf = p["k_fit"]
        if not (isinstance(kf, list) and len(kf) == 2 and all(_is_int(v) and v >= 1 for v in kf)
                and kf[0] < kf[1]):
            errors.append("params.k_fit: expected [k_lo, k_hi] with 1 <= k_lo < k_hi")
    for key in ("deltas", "N_values"):
        if key in p and not (isinstance(p[key], list) and p[key] and all(_is_num(v) and v > 0
                                                                          for v in p[key])):
            errors.append(f"params.{key}: expected a nonempty list of positive numbers")
    if kind == "tower-law":
        tc = cfg.get("tower", {})
        if not isinstance(tc, dict):
            errors.append("tower: expected an object")
        else:
            for k in sorted(set(tc) - TOWER_KEYS):
                errors.append(f"unknown key 'tower.{k}'")
            if "lambda_tail" in tc:
                _check_range(errors, "tower.lambda_tail", tc["lambda_tail"], 1, None)
            if "i_max" in tc:
                _check_range(errors, "tower.i_max", tc["i_max"], 2, None, lo_open=False,
                             integer=True)
            if "gamma" in tc:
                _check_range(errors, "tower.gamma", tc["gamma"], 0, 1)
    if kind == "bound-eval":
        b = cfg.get("bound")
        if not isinstance(b, dict):
            errors.append("bound: required object")
        else:
            for k in sorted(set(b) - BOUND_KEYS):
                errors.append(f"unknown key 'bound.{k}'")
            optional = {"C5", "C6"} | ({"s", "alpha_at_N"} if "alpha" in cfg else set())
            for k in sorted(BOUND_KEYS - optional - set(b)):
                errors.append(f"bound.{k}: required")
            for k, v in b.items():
                if k in BOUND_KEYS and not (_is_num(v) and v >= 0):
                    errors.append(f"bound.{k}: expected a nonnegative number, got {v!r}")
    if "alpha" in cfg:
        a = cfg["alpha"]
        if not (isinstance(a, dict) and a.get("form") in ("Zero", "Geometric", "Polynomial")
                and set(a) <= {"form", "c", "rho_or_kappa"}):
            errors.append("alpha: expected {form: Zero|Geometric|Polynomial, c, rho_or_kappa}")
    if kind in ("entry-law", "return-law", "oracle-compare", "phi-scan", "tower-law"):
        if not isinstance(cfg.get("target"), dict):
            errors.append("target: required object")
    if kind == "entropy":
        t = cfg.get("target")
        if not (isinstance(t, dict) and "epsilon" in t and "n" in t):
            errors.append("target: entropy needs {epsilon, n}")
    if kind == "kac" and not (isinstance(cfg.get("targets"), list) or isinstance(cfg.get("target"),
                                                                               dict)):
        errors.append("targets: kac needs a list of targets (or one target)")
    for tkey in ("target",):
        t = cfg.get(tkey)
        if isinstance(t, dict):
            errors.extend(_validate_target(t, tkey))
    if isinstance(cfg.get("targets"), list):
        for i, t in enumerate(cfg["targets"]):
            if not isinstance(t, dict):
                errors.append(f"targets[{i}]: expected an object")
            else:
                errors.extend(_validate_target(t, f"targets[{i}]"))
    return errors


def _validate_system(s):
    errors = []
    for k in sorted(set(s) - {"kind", "p", "P"}):
        errors.append(f"unknown key 'system.{k}'")
    kind = s.get("kind")
    if kind not in ("DoublingMap", "BernoulliShift", "MarkovShift"):
        errors.append(f"system.kind: expected DoublingMap, BernoulliShift or MarkovShift, "
                      f"got {kind!r}")
        return errors
    try:
        _build_system(s)
    except (ValueError, TypeError, KeyError) as exc:
        errors.append(f"system: {exc}")
    return errors


TARGET_KEYS = {"word", "words", "epsilon", "n", "center"}


def _validate_target(t, where):
    errors = [f"unknown key '{where}.{k}'" for k in sorted(set(t) - TARGET_KEYS)]
    if "word" in t or "words" in t:
        ws = t.get("words", [t.get("word")])
        if not (isinstance(ws, list) and ws and all(
                isinstance(w, list) and w and all(_is_int(a) and a >= 0 for a in w) for w in ws)):
            errors.append(f"{where}: words must be nonempty lists of symbols")
    elif "epsilon" in t:
        _check_range(errors, f"{where}.epsilon", t["epsilon"], 0, None)
        _check_range(errors, f"{where}.n", t.get("n"), 1, None, lo_open=False, integer=True)
    else:
        errors.append(f"{where}: give word(s) or epsilon/n/center")
    return errors


# ------------------------------------------------------------------ builders

def _build_system(s):
    kind = s["kind"]
    if kind == "DoublingMap":
        return SystemDescriptor.doubling()
    if kind == "BernoulliShift":
        return SystemDescriptor.bernoulli(s["p"])
    return SystemDescriptor.markov(s["P"])


def _center(sys, c, seed):
    if sys.kind is SystemKind.DOUBLING:
        if isinstance(c, dict):
            return sample_invariant(sys, c.get("seed", seed), c.get("stream", 0))
        return float(c if c is not None else 0.5)
    if c is None:
        c = {"stream": 0}
    if isinstance(c, dict):
        if "periodic" in c:
            return ShiftPoint.periodic(c["periodic"])
        return sample_invariant(sys, c.get("seed", seed), c.get("stream", 0))
    return ShiftPoint.periodic(c)


def _target(sys, t, seed):
    if "words" in t:
        return symbolic.WordSet([tuple(w) for w in t["words"]])
    if "word" in t:
        return tuple(t["word"])
    return symbolic.BowenSpec(_center(sys, t.get("center"), seed), t["epsilon"], t["n"])


def _describe_target(t):
    return json.dumps(t, sort_keys=True)


# ------------------------------------------------------------------ output

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


@dataclass
class RunReport:
    kind: str
    passed: bool
    summary: dict
    outputs: list
    tolerance: float = None
    wall_clock: float = 0.0
    steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return 0 if self.passed else 2

    def to_dict(self):
        return _jsonable({"kind": self.kind, "pass": self.passed, "tolerance": self.tolerance,
                          "summary": self.summary, "outputs": self.outputs,
                          "wall_clock_seconds": self.wall_clock, "orbit_steps": self.steps})


def _survival_rows(curve):
    return zip(curve.t, curve.values, curve.n_at_risk)


def _count_rows(sample):
    vals, cnt = sample.counts()
    return zip(vals, cnt)


def _steps(sample):
    return int(sample.times.sum()) + sample.censored_count * sample.horizon


def _grid(params):
    g = params.get("grid", {})
    return default_grid(g.get("n", 200), g.get("lo", 0.01), g.get("hi", 10.0))


# ------------------------------------------------------------------ experiments

def _entry_law(ctx):
    cfg, sys, p = ctx["cfg"], ctx["sys"], ctx["params"]
    tgt = hitting.resolve_target(sys, _target(sys, cfg["target"], ctx["seed"]))
    M = cfg.get("M", 20_000)
    sample = hitting.sample_entry_times(sys, tgt, M, cfg.get("horizon"), ctx["seed"],
                                        ctx["workers"])
    f = p.get("f") or hitting.default_f(tgt.mu, p.get("beta", 0.9))
    lam = hitting.empirical_lambda(sample, f, tgt.mu)
    if not lam.defined:
        raise RuntimeError(f"lambda undefined: P(tau > {f}) = {lam.survival_at_f}")
    curve, ks, _ = hitting.survival_and_ks(sample, tgt.mu, lam.value, _grid(p))
    tol = ctx["tolerance"]
    passed = ks <= tol and curve.reliable
    files = [("survival.csv", ("t", "survival", "n_at_risk"), _survival_rows(curve)),
             ("times.csv", ("time", "count"), _count_rows(sample))]
    summary = {"mu": tgt.mu, "lambda": lam.value, "lambda_ci": [lam.lo, lam.hi], "f": f,
               "ks": ks, "dkw_99": dkw_bound(M), "censored_fraction": sample.censored_fraction,
               "reliable": curve.reliable, "M": M, "horizon": sample.horizon}
    return summary, passed, files, _steps(sample)


def _return_law(ctx):
    cfg, sys, p = ctx["cfg"], ctx["sys"], ctx["params"]
    tgt = hitting.resolve_target(sys, _target(sys, cfg["target"], ctx["seed"]))
    M = cfg.get("M", 100_000)
    Delta = p.get("Delta", 1)
    sample = hitting.sample_return_times(sys, tgt, M, cfg.get("horizon"), ctx["seed"],
                                         p.get("burn_in", hitting.DEFAULT_BURN_IN),
                                         p.get("n_orbits", hitting.DEFAULT_ORBITS),
                                         ctx["workers"])
    tau = hitting.target_period(sys, tgt)
    a_emp = float((sample.times > tau + Delta).mean())
    summary = {"mu": tgt.mu, "tau": tau, "Delta": Delta, "a_empirical": a_emp, "M": M}
    f = p.get("f") or hitting.default_f(tgt.mu, p.get("beta", 0.9))
    if tgt.kind == "words":
        # exact curve; the lambda <= 2 check needs f mu <= 1/2 and is not applied here
        s_f = oracle.exact_survival(sys, tgt.words, f).values[f]
        lam = hitting.lambda_estimator(s_f, f, tgt.mu, mode="Exact")
        _, a_exact, tau_exact = oracle.exact_conditional_survival(sys, tgt.words, Delta)
        a = a_exact
        summary.update({"a_exact": a_exact, "tau_exact": tau_exact, "lambda_mode": "Exact"})
    else:
        entry = hitting.sample_entry_times(sys, tgt, M, None, ctx["seed"], ctx["workers"])
        lam = hitting.empirical_lambda(entry, f, tgt.mu)
        a = a_emp
        summary["lambda_mode"] = "Empirical"
    curve, ks, ks_a = hitting.survival_and_ks(sample, tgt.mu, lam.value, _grid(p), a, tau,
                                              Delta)
    tol = ctx["tolerance"]
    summary.update({"lambda": lam.value, "f": f, "a_used": a, "ks_exponential": ks,
                    "ks_a_exponential": ks_a, "validity_start": (tau + Delta) * lam.value * tgt.mu})
    passed = ks_a is not None and ks_a <= tol
    files = [("survival.csv", ("t", "survival", "n_at_risk"), _survival_rows(curve)),
             ("times.csv", ("time", "count"), _count_rows(sample))]
    return summary, passed, files, int(sample.times.sum())


def _oracle_compare(ctx):
    cfg, sys = ctx["cfg"], ctx["sys"]
    if not sys.is_shift and "word" not in cfg["target"] and "words" not in cfg["target"]:
        raise ConfigError(["oracle-compare needs a shift system or a word target"])
    tgt = hitting.resolve_target(sys, _target(sys, cfg["target"], ctx["seed"]))
    if tgt.kind != "words":
        raise ConfigError(["oracle-compare needs a cylinder target"])
    M = cfg.get("M", 1_000_000)
    horizon = cfg.get("horizon", 1000)
    sample = hitting.sample_entry_times(sys, tgt, M, horizon, ctx["seed"], ctx["workers"])
    exact = oracle.exact_survival(sys, tgt.words, horizon).values
    ts = np.arange(horizon + 1)
    from .survival import empirical_survival
    emp, at_risk = empirical_survival(sample.times, M, ts)
    dev = float(np.abs(emp - exact).max())
    bound = dkw_bound(M, 0.999)
    files = [("survival_compare.csv", ("t", "empirical", "exact", "n_at_risk"),
              zip(ts, emp, exact, at_risk)),
             ("times.csv", ("time", "count"), _count_rows(sample))]
    summary = {"mu": tgt.mu, "sup_deviation": dev, "dkw_999": bound, "M": M,
               "horizon": horizon, "censored_fraction": sample.censored_fraction}
    tol = ctx["cfg"].get("tolerance", bound)
    return summary, dev <= tol, files, _steps(sample)


def _kac(ctx):
    cfg, sys, p = ctx["cfg"], ctx["sys"], ctx["params"]
    targets = cfg.get("targets") or [cfg["target"]]
    M = cfg.get("M", 100_000)
    rows, all_ok, steps = [], True, 0
    for t in targets:
        tgt = hitting.resolve_target(sys, _target(sys, t, ctx["seed"]))
        sample = hitting.sample_return_times(sys, tgt, M, cfg.get("horizon"), ctx["seed"],
                                             p.get("burn_in", hitting.DEFAULT_BURN_IN),
                                             p.get("n_orbits", hitting.DEFAULT_ORBITS),
                                             ctx["workers"])
        ratio, sigma = hitting.kac_statistic(sample)
        ok = abs(ratio - 1.0) <= 4.0 * sigma
        exact = float("nan")
        if tgt.kind == "words" and sys.is_shift:
            exact = oracle.exact_kac_mean(sys, tgt.words)
            ok = ok and abs(exact * tgt.mu - 1.0) <= 1e-9
        all_ok &= ok
        steps += int(sample.times.sum())
        rows.append((tgt.label, tgt.mu, float(sample.times.mean()), ratio, sigma, exact, ok))
    files = [("kac.csv", ("target", "mu", "mean_return", "ratio", "sigma_hat",
                          "exact_kac_mean", "pass"), rows)]
    summary = {"targets": [r[0] for r in rows], "ratios": [r[3] for r in rows],
               "sigma_hat": [r[4] for r in rows], "M": M}
    return summary, all_ok, files, steps


def _entropy(ctx):
    cfg, sys, p = ctx["cfg"], ctx["sys"], ctx["params"]
    t = cfg["target"]
    n_points = p.get("n_points", 200)
    eps, n = t["epsilon"], t["n"]
    ids = list(range(n_points))
    from concurrent.futures import ThreadPoolExecutor

    def one(i):
        return hitting.entropy_estimators(sys, eps, n, ctx["seed"], i, cfg.get("horizon"))
    if ctx["workers"] > 1:
        with ThreadPoolExecutor(max_workers=ctx["workers"]) as pool:
            est = list(pool.map(one, ids))
    else:
        est = [one(i) for i in ids]
    h = sys.entropy()
    ow = np.array([e.ow for e in est])
    med = float(np.nanmedian(ow))
    rel = abs(med - h) / h
    files = [("entropy.csv", ("stream", "bk", "ow", "recurrence"),
              [(i, e.bk, e.ow, e.recurrence) for i, e in zip(ids, est)])]
    summary = {"entropy": h, "median_ow": med, "relative_error": rel,
               "median_bk": float(np.median([e.bk for e in est])),
               "censored": int(sum(e.censored for e in est)), "n_points": n_points}
    return summary, rel <= ctx["tolerance"], files, int(sum(max(e.recurrence, 0) for e in est))


def _mixing(ctx):
    sys, p = ctx["sys"], ctx["params"]
    k_max = p.get("k_max", 20)
    L = p.get("L", 8)
    ks, alphas = measure.alpha_scan(sys, range(1, k_max + 1), L)
    k_lo, k_hi = p.get("k_fit", [5, 15])
    sel = (ks >= k_lo) & (ks <= k_hi)
    model = measure.fit_geometric(ks[sel], alphas[sel])
    rate = measure.second_eigenvalue_modulus(sys)
    summary = {"max_alpha": float(alphas.max()), "model": model.to_config(),
               "second_eigenvalue": rate, "L": L, "note": "single-cylinder lower bound"}
    if sys.kind is SystemKind.MARKOV:
        fitted = model.param if model.form is measure.AlphaForm.GEOMETRIC else 0.0
        summary["rate_relative_error"] = abs(fitted - rate) / rate
        passed = summary["rate_relative_error"] <= ctx["tolerance"]
    else:
        passed = float(alphas.max()) <= 1e-12
    files = [("alpha.csv", ("k", "alpha"), zip(ks, alphas))]
    return summary, passed, files, 0


def _phi_scan(ctx):
    cfg, sys, p = ctx["cfg"], ctx["sys"], ctx["params"]
    t = cfg["target"]
    spec = _target(sys, t, ctx["seed"])
    if not isinstance(spec, symbolic.BowenSpec):
        raise ConfigError(["phi-scan needs target {epsilon, n, center}"])
    deltas = p.get("deltas", [spec.epsilon * f for f in (0.01, 0.05, 0.1, 0.2, 0.5)])
    phis = [measure.phi(sys, spec.epsilon, d, spec.center) for d in deltas if d < spec.epsilon]
    files = [("phi.csv", ("delta", "phi"), zip(deltas, phis))]
    summary = {"epsilon": spec.epsilon, "phi": phis}
    passed = all(v >= 0 for v in phis) and all(b >= a for a, b in zip(phis, phis[1:]))
    if sys.kind is SystemKind.DOUBLING:
        Ns = p.get("N_values", [2 * spec.n, 4 * spec.n, 8 * spec.n])
        rows, ratios = [], []
        mu_b = measure.bowen_measure(sys, spec).value
        for N in Ns:
            inner, ann = symbolic.inner_and_annulus(sys, spec, int(N))
            mi, ma = float(inner.measure()), float(ann.measure())
            exact_nest = inner.measure() <= _exact_ball(spec) <= inner.measure() + ann.measure()
            rows.append((int(N), mi, ma, mu_b, ma / mu_b, exact_nest))
            ratios.append(ma / mu_b)
            passed &= bool(exact_nest)
        passed &= all(b < a for a, b in zip(ratios, ratios[1:]))
        files.append(("annulus.csv", ("N", "inner_measure", "annulus_measure", "ball_measure",
                                      "annulus_ratio", "nested"), rows))
        summary["annulus_ratios"] = ratios
    return summary, passed, files, 0


def _exact_ball(spec):
    from fractions import Fraction
    return 2 * Fraction(spec.epsilon) / 2 ** (spec.n - 1)


def _tower_law(ctx):
    cfg, p = ctx["cfg"], ctx["params"]
    tc = cfg.get("tower", {})
    spec = tower.TowerSpec(tc.get("lambda_tail", 9.0), tc.get("i_max", p.get("i_max", 10_000)),
                           tc.get("gamma", p.get("gamma", 0.5)))
    t = cfg["target"]
    c = t.get("center", {})
    addr = tower.sample_srb(spec, c.get("seed", 7), c.get("stream", 0)).address
    center = tower.TowerPoint(c.get("column", 3), c.get("level", 1), addr)
    ball = tower.tower_ball(spec, center, t["epsilon"], t["n"])
    M = cfg.get("M", 20_000)
    exp = tower.tower_hitting_experiment(spec, ball, M, cfg.get("horizon"), ctx["seed"],
                                         ctx["workers"], p.get("beta", 0.9), p.get("eta", 0.45),
                                         _grid(p))
    occ = tower.occupancy_chi2(spec, p.get("occupancy_samples", 1_000_000),
                               p.get("occupancy_steps", 50), ctx["seed"])
    npm = exp.non_principal
    summary = {"mu": exp.mu, "word_length": len(ball.word), "lambda": exp.lam.value,
               "ks": exp.ks, "law_asserted": exp.asserted, "occupancy": occ,
               "non_principal": npm, "truncation": spec.truncation_report(),
               "censored_fraction": exp.sample.censored_fraction, "M": M}
    passed = occ["p_value"] > 0.01 and npm.get("total", 0.0) < 0.01
    if exp.asserted:
        passed = passed and exp.ks <= ctx["tolerance"] and exp.curve.reliable
    files = [("survival.csv", ("t", "survival", "n_at_risk"), _survival_rows(exp.curve)),
             ("times.csv", ("time", "count"), _count_rows(exp.sample))]
    return summary, passed, files, _steps(exp.sample)


def _bound_eval(ctx):
    b = dict(ctx["cfg"]["bound"])
    summary = {}
    if "alpha" in ctx["cfg"]:
        model = measure.AlphaModel.from_config(ctx["cfg"]["alpha"])
        b.setdefault("alpha_at_N", model(b["N"]))
        b.setdefault("s", measure.s_parameter(model, b["mu_inner"], int(b["N"]),
                                              ctx["params"].get("C_prime", 0.5)))
        summary.update({"s": b["s"], "alpha_at_N": b["alpha_at_N"]})
    args = (b["theta"], b["t"], b["s"], b["lambda"])
    rest = dict(mu_ball=b["mu_ball"], mu_inner=b["mu_inner"], N=b["N"],
                alpha_at_N=b["alpha_at_N"], C5=b.get("C5", 1.0), C6=b.get("C6", 1.0))
    try:
        summary["bound"] = hitting.mainthm_bound(*args, b["f"], **rest)
        summary["admissible"] = True
    except hitting.EmptyRangeError as exc:
        summary.update({"bound": None, "admissible": False, "error": str(exc)})
    rows = []
    try:
        f_best, v_best = hitting.minimize_mainthm_f(*args, **rest)
        summary.update({"f_opt": f_best, "bound_opt": v_best})
        lo, hi = 2 * b["N"] + 1, math.ceil(0.5 / b["mu_ball"]) - 1
        fs = np.unique(np.geomspace(lo, hi, 50).round().astype(np.int64))
        rows = [(int(f), hitting.mainthm_bound(*args, int(f), **rest)) for f in fs]
    except hitting.EmptyRangeError as exc:
        summary["range_error"] = str(exc)
    files = [("bound.csv", ("f", "bound"), rows)]
    return summary, bool(summary["admissible"]), files, 0


HANDLERS = {"entry-law": _entry_law, "return-law": _return_law,
            "oracle-compare": _oracle_compare, "kac": _kac, "entropy": _entropy,
            "mixing-scan": _mixing, "phi-scan": _phi_scan, "tower-law": _tower_law,
            "bound-eval": _bound_eval}


def run(cfg, out_dir, seed=None, workers=1):
    """Validate ``cfg``, run the experiment and write its outputs under ``out_dir``."""
    errors = validate(cfg)
    if errors:
        raise ConfigError(errors)
    kind = cfg["kind"]
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    ctx = {"cfg": cfg, "params": cfg.get("params", {}), "seed": seed, "workers": int(workers),
           "tolerance": cfg.get("tolerance", DEFAULT_TOLERANCE.get(kind))}
    if kind not in ("tower-law", "bound-eval"):
        ctx["sys"] = _build_system(cfg["system"])
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    summary, passed, files, steps = HANDLERS[kind](ctx)
    outputs = []
    for name, header, rows in files:
        outputs.append(write_csv(os.path.join(out_dir, name), header, rows))
    meta = {"kind": kind, "seed": seed, "system": cfg.get("system"), "tower": cfg.get("tower"),
            "target": cfg.get("target", cfg.get("targets")), "params": ctx["params"],
            "mode": "Exact" if kind in ("mixing-scan", "phi-scan", "bound-eval") else "MonteCarlo"}
    for key in ("mu", "lambda", "censored_fraction"):
        if key in summary:
            meta[key] = summary[key]
    meta_path = os.path.join(out_dir, "meta.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(meta_path)
    report = RunReport(kind, bool(passed), summary, outputs, ctx["tolerance"],
                       time.perf_counter() - start, steps, meta)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def main(argv=None):
    ap = argparse.ArgumentParser(prog="bowenhit", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="experiment config (JSON)")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    ap.add_argument("--workers", type=int, default=1, help="worker threads")
    ap.add_argument("--out", default="out", help="output directory")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    if args.workers < 1:
        print("error: --workers must be >= 1", file=_sys.stderr)
        return 1
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=_sys.stderr)
        return 1
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=_sys.stderr)
        return 1
    try:
        report = run(cfg, args.out, args.seed, args.workers)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=_sys.stderr)
        return 1
    status = "PASS" if report.passed else "FAIL"
    print(f"{report.kind}: {status}  ({os.path.join(args.out, 'report.json')})")
    for k, v in report.summary.items():
        if isinstance(v, (int, float, str, bool)) or v is None:
            print(f"  {k} = {v}")
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    _sys.exit(main())
