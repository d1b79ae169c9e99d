"""Acceptance gate.

Every criterion part is a test and also prints one ``[PASS]``/``[FAIL]``
line. Run ``python3 tests/test_acceptance.py`` for the summary alone, or
``pytest -s tests/test_acceptance.py`` to see the lines next to pytest's
verdicts. Tolerances here are fixed; do not loosen them to go green.
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize, special, stats

from equiabos import asymptotics as asy
from equiabos.data import empirical_moments, generate, replicate_seed
from equiabos.model import LossParams, ModelParams, derive_scales
from equiabos.risk import bayes_risk_fixed, optimal_risk
from equiabos.thresholds import (
    bfdr_of_threshold,
    bfdr_threshold,
    bh_random_threshold,
    bh_reject,
    bonferroni_expansion,
    bonferroni_threshold,
    fixed_threshold_reject,
    gw_fdr_of_threshold,
    gw_threshold,
    oracle_cutoff,
)

CANON_GRID = (100, 1000, 10_000, 100_000, 1_000_000)
MC_GRID = (100, 1000, 10_000, 100_000)
Q_099875 = 3.023341439739147364        # mpmath quantile, frozen


@dataclass
class Outcome:
    label: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.label}: {self.detail}"


def report(label: str, passed: bool, detail: str) -> Outcome:
    out = Outcome(label, bool(passed), detail)
    print(out.line())
    return out


def strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def fmt(xs, spec=".4g") -> str:
    return "[" + ", ".join(format(x, spec) for x in xs) + "]"


_SEQ = {}


def canonical_points(grid=CANON_GRID):
    if grid not in _SEQ:
        spec = asy.RegimeSpec("extreme_sparse", grid, C=2.0, s_target=1.0, delta=1.0, alpha=0.05)
        _SEQ[grid] = asy.build_sequence(spec)
    return _SEQ[grid]


# 1 ---------------------------------------------------------------------------

PAIRS = [(0, 1), (10, 20), (24, 25), (30, 49), (48, 49)]


def criterion_1() -> Outcome:
    t0 = time.perf_counter()
    worst, parts = 0.0, []
    for rho in (0.0, 0.3, 0.6):
        params = ModelParams(m=50, p=0.1, sigma_eps_sq=1.0, rho=rho, sigma0_sq=0.5, tau_sq=4.0)
        rep = empirical_moments(params, 100_000, PAIRS, seed=20261015)
        z = max(rep.max_var_z, rep.max_cov_z)
        worst = max(worst, z)
        parts.append(f"rho={rho}: var z={rep.max_var_z:.2f} cov z={rep.max_cov_z:.2f}")
    elapsed = time.perf_counter() - t0
    ok = worst <= 3.0 and elapsed < 60.0
    return report("1 decomposition law", ok, "; ".join(parts) + f"; {elapsed:.1f}s")


# 2 ---------------------------------------------------------------------------

def lr_root(u: float, f: float, delta: float) -> float:
    """Squared point where the weighted alternative density overtakes the null."""
    w = math.sqrt(1.0 + u)

    def g(y):
        return (stats.norm.logpdf(y, scale=w) - stats.norm.logpdf(y)) - math.log(f * delta)

    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
    y = optimize.brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return y * y


def criterion_2() -> Outcome:
    rng = np.random.default_rng(2)
    worst, n = 0.0, 0
    while n < 50:
        u = math.exp(rng.uniform(math.log(0.5), math.log(500.0)))
        f = math.exp(rng.uniform(math.log(2.0), math.log(1e5)))
        delta = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
        scales = derive_scales(ModelParams(1000, 1 / (1 + f), 1.0, 0.0, 0.0, u),
                               LossParams(delta, 1.0))
        res = oracle_cutoff(scales)
        if res.always_reject:
            continue
        worst = max(worst, abs(res.c_sq - lr_root(u, scales.f, delta)))
        n += 1
    return report("2 oracle cross-derivation", worst <= 1e-8, f"max |dc^2| = {worst:.2e} over 50")


# 3 ---------------------------------------------------------------------------

def criterion_3() -> Outcome:
    worst_a, worst_r = 0.0, 0.0
    for u in (1.0, 5.0, 20.0, 100.0, 1000.0):
        for p in (0.001, 0.01, 0.05, 0.1, 0.3):
            scales = derive_scales(ModelParams(1000, p, 1.0, 0.0, 0.0, u), LossParams())
            for alpha in (0.01, 0.05, 0.1):
                b = bfdr_threshold(alpha, scales)
                g = gw_threshold(alpha, scales, p)
                worst_a = max(worst_a, abs(bfdr_of_threshold(b.c, scales, p) - alpha),
                              abs(gw_fdr_of_threshold(g.c, scales, p) - alpha))
                worst_r = max(worst_r, abs(b.solver_residual), abs(g.solver_residual))
    ok = worst_a <= 1e-8 and worst_r <= 1e-10
    return report("3 implicit-threshold round-trips", ok,
                  f"max |alpha err| = {worst_a:.2e}, max residual = {worst_r:.2e}")


# 4 ---------------------------------------------------------------------------

def bon_gap(m: int) -> float:
    return abs(bonferroni_expansion(0.05, m).c_sq - bonferroni_threshold(0.05, m).c_sq)


def criterion_4a() -> Outcome:
    gap = bon_gap(1_000_000)
    return report("4a Bonferroni expansion gap at m=1e6 <= 0.01", gap <= 0.01, f"gap = {gap:.4f}")


def criterion_4b() -> Outcome:
    g6, g2 = bon_gap(1_000_000), bon_gap(100)
    return report("4b gap(1e6) < gap(1e2)", g6 < g2, f"{g6:.4f} < {g2:.4f}")


def criterion_4c() -> Outcome:
    c_sq = bonferroni_threshold(0.05, 20).c_sq
    err = abs(c_sq - Q_099875 ** 2)
    return report("4c exact Bonferroni at m=20", err <= 1e-4, f"c^2 = {c_sq:.8f}, err = {err:.1e}")


# 5 ---------------------------------------------------------------------------

def criterion_5() -> Outcome:
    rng = np.random.default_rng(5)
    mismatches = not_superset = nonempty = 0
    for i in range(1000):
        m = (5, 50, 500)[i % 3]
        alpha = rng.uniform(0.01, 0.3)
        signal = rng.random(m) < rng.uniform(0.0, 0.5)
        x = rng.standard_normal(m) + signal * rng.normal(0.0, rng.uniform(1.0, 6.0), m)
        if i % 4 == 0:
            x = np.round(x, 1)          # force ties
        u = x - x.mean()
        bh = bh_reject(u, 1.0, alpha).rejected
        thr = fixed_threshold_reject(u, 1.0, bh_random_threshold(u, 1.0, alpha).c_sq).rejected
        bon = fixed_threshold_reject(u, 1.0, bonferroni_threshold(alpha, m).c_sq).rejected
        mismatches += not np.array_equal(bh, thr)
        not_superset += bool(np.any(bon & ~bh))
        nonempty += bool(bh.any())
    ok = mismatches == 0 and not_superset == 0
    return report("5 BH equivalence", ok, f"{mismatches} set mismatches, {not_superset} "
                  f"Bonferroni-not-contained, {nonempty}/1000 instances with rejections")


# 6 ---------------------------------------------------------------------------

def criterion_6() -> Outcome:
    rng = np.random.default_rng(6)
    boundary_ok, worst = True, -math.inf
    for _ in range(20):
        m = int(rng.integers(10, 10**6))
        p = math.exp(rng.uniform(math.log(1e-4), math.log(0.4)))
        params = ModelParams(m, p, rng.uniform(0.5, 2.0), rng.uniform(0.0, 0.9),
                             rng.uniform(0.0, 1.0), math.exp(rng.uniform(0.0, 6.0)))
        losses = LossParams(rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0))
        boundary_ok &= bayes_risk_fixed(math.inf, params, losses) == m * p * losses.deltaA
        boundary_ok &= bayes_risk_fixed(-1.0, params, losses) == m * (1 - p) * losses.delta0
        best = optimal_risk(params, losses)
        c_opt = math.sqrt(max(oracle_cutoff(derive_scales(params, losses)).c_sq, 0.0))
        grid = np.linspace(0.0, max(12.0, 2 * c_opt), 200) ** 2
        grid_best = min(bayes_risk_fixed(float(c2), params, losses) for c2 in grid)
        worst = max(worst, (best - grid_best) / grid_best)
    ok = boundary_ok and worst <= 1e-12
    return report("6 risk identities", ok,
                  f"boundaries exact: {boundary_ok}; max (oracle - grid best)/grid best = {worst:.2e}")


# 7 ---------------------------------------------------------------------------

def conditional_disagreement(c: float, shift: float, u: float, p: float) -> float:
    """P(exactly one of |Y| >= c, |Y - shift| >= c) for Y from the standardized mixture."""
    s = abs(shift)
    out = 0.0
    for w, weight in ((1.0, 1.0 - p), (math.sqrt(1.0 + u), p)):
        out += weight * (special.ndtr(-(c - s) / w) - special.ndtr(-(c + s) / w))
    return out


def criterion_7() -> Outcome:
    raw, smooth, corr = [], [], []
    for pt in canonical_points(MC_GRID):
        c_sq = oracle_cutoff(pt.scales).c_sq
        c, sigma = math.sqrt(c_sq), math.sqrt(pt.params.sigma_sq)
        r_vals, s_vals, k_vals = [], [], []
        for r in range(200):
            d = generate(pt.params, replicate_seed(2027, r))
            a = fixed_threshold_reject(d.u_centered, sigma, c_sq).rejected
            b = fixed_threshold_reject(d.z, sigma, c_sq).rejected
            r_vals.append(np.count_nonzero(a != b) / pt.m)
            shift = d.z.mean() / sigma
            s_vals.append(conditional_disagreement(c, shift, pt.scales.u, pt.params.p))
            k_vals.append(c * abs(shift))
        raw.append(math.fsum(r_vals) / 200)
        smooth.append(math.fsum(s_vals) / 200)
        corr.append(math.fsum(k_vals) / 200)
    ok = strictly_decreasing(smooth) and strictly_decreasing(corr) and raw[-1] < raw[0]
    return report("7 centering correction vanishes", ok,
                  f"rate (conditional) {fmt(smooth)}; raw {fmt(raw)}; "
                  f"mean sqrt(c)|Zbar|/sigma {fmt(corr)}")


# 8 ---------------------------------------------------------------------------

def criterion_8a() -> Outcome:
    rep = asy.check_assumption1(canonical_points(), 2.0)
    return report("8a check_assumption1", rep.passed, verdicts(rep))


def verdicts(rep) -> str:
    return ", ".join(f"{v.name}={'PASS' if v.passed else 'FAIL'}" for v in rep.verdicts)


def criterion_8b(rule: str) -> Outcome:
    rep = asy.check_abos_conditions(canonical_points(), rule)
    return report(f"8b ABOS conditions, {rule}", rep.passed,
                  f"{verdicts(rep)}; |l|/log v {fmt(rep.trace['abs_l_over_log_v'])}; "
                  f"l + 2 loglog v {fmt(rep.trace['g_m'])}")


def criterion_8c() -> Outcome:
    rep = asy.check_bfdr_conditions(canonical_points())
    return report("8c BFDR conditions", rep.passed,
                  f"{verdicts(rep)}; divergence {fmt(rep.trace['divergence'])}")


def criterion_8d(rule: str) -> Outcome:
    ratios = [r.ratio for r in asy.risk_ratio_curve(canonical_points(), rule)]
    return report(f"8d closed-form risk ratio decreasing, {rule}", strictly_decreasing(ratios),
                  fmt(ratios, ".6f"))


def criterion_8e() -> Outcome:
    t0 = time.perf_counter()
    curve = asy.risk_ratio_curve(canonical_points(MC_GRID), "bh",
                                 asy.MonteCarloConfig(200, seed=2026))
    ratios = [r.ratio for r in curve]
    elapsed = time.perf_counter() - t0
    ok = strictly_decreasing(ratios) and ratios[-1] <= 1.3 and elapsed < 600
    pairs = ", ".join(f"{r.ratio:.3f}±{r.se:.3f}" for r in curve)
    return report("8e BH Monte Carlo risk ratio", ok,
                  f"{pairs}; final <= 1.3: {ratios[-1] <= 1.3}; "
                  f"decreasing: {strictly_decreasing(ratios)}; {elapsed:.1f}s")


# 9 ---------------------------------------------------------------------------

def criterion_9() -> Outcome:
    # constant p with u still growing
    pts = []
    for m, u in zip(CANON_GRID, (5.0, 6.0, 7.0, 8.0, 9.0)):
        params = ModelParams(m, 0.01, 1.0, 0.0, 0.0, u)
        pts.append(asy.make_point(m, params, LossParams(), 0.05, rules=()))
    a1 = not asy.check_assumption1(pts, 2.0).verdict("p_to_zero").passed

    def twice_log_v(pt):
        return 2.0 * pt.scales.log_v
    ab = not asy.check_abos_conditions(canonical_points(), twice_log_v).passed

    def alpha_fixed_ratio(m):       # r_alpha / f == 0.1
        r = 0.1 * (m - 1)
        return r / (1 + r)
    seq = asy.build_sequence(asy.RegimeSpec("extreme_sparse", CANON_GRID, C=2.0,
                                            s_target=1.0, alpha=alpha_fixed_ratio))
    bf = not asy.check_bfdr_conditions(seq).passed
    return report("9 negative controls", a1 and ab and bf,
                  f"constant p rejected: {a1}; c^2 = 2 log v rejected: {ab}; "
                  f"constant r/f rejected: {bf}")


# 10 --------------------------------------------------------------------------

CLI_CONFIG = {
    "model": {"m": 500, "p": 0.02, "sigma_eps_sq": 1.0, "rho": 0.5, "sigma0_sq": 0.0,
              "tau_sq": 40.0},
    "losses": {"delta0": 1.0, "deltaA": 1.0},
    "rules": [{"name": "oracle"}, {"name": "bfdr_fixed", "alpha": 0.05},
              {"name": "gw", "alpha": 0.05}, {"name": "bonferroni", "alpha": 0.05},
              {"name": "bh", "alpha": 0.05}],
    "mc": {"n_replicates": 60, "master_seed": 314},
    "regime": {"regime": "extreme_sparse", "s_target": 1, "C": 2, "delta": 1,
               "alpha": 0.05, "m_grid": [100, 1000, 10000]},
}


def criterion_10(workdir: Path) -> Outcome:
    cfg = workdir / "cfg.json"
    cfg.write_text(json.dumps(CLI_CONFIG))
    identical = []
    for command, fname in (("simulate", "risk_summary.csv"), ("sweep", "sweep_trace.csv")):
        blobs = []
        for tag, jobs in (("a", 1), ("b", 1), ("c", 8), ("d", 8)):
            out = workdir / f"{command}_{tag}"
            proc = subprocess.run([sys.executable, "-m", "equiabos", command, "--config", str(cfg),
                                   "--seed", "99", "--out", str(out), "--jobs", str(jobs)],
                                  capture_output=True, text=True)
            if proc.returncode != 0:
                return report("10 determinism", False, f"{command} exited {proc.returncode}: "
                              f"{proc.stderr.strip()}")
            blobs.append((out / fname).read_bytes())
        identical.append(len(set(blobs)) == 1)
    return report("10 determinism", all(identical),
                  f"simulate identical: {identical[0]}; sweep identical: {identical[1]}")


# pytest wrappers ---------------------------------------------------------------

def test_criterion_1_decomposition_law():
    assert criterion_1().passed


def test_criterion_2_oracle_cross_derivation():
    assert criterion_2().passed


def test_criterion_3_implicit_round_trips():
    assert criterion_3().passed


def test_criterion_4a_bonferroni_gap_at_1e6():
    assert criterion_4a().passed


def test_criterion_4b_bonferroni_gap_shrinks():
    assert criterion_4b().passed


def test_criterion_4c_bonferroni_m20():
    assert criterion_4c().passed


def test_criterion_5_bh_equivalence():
    assert criterion_5().passed


def test_criterion_6_risk_identities():
    assert criterion_6().passed


def test_criterion_7_centering_correction():
    assert criterion_7().passed


def test_criterion_8a_assumption1():
    assert criterion_8a().passed


@pytest.mark.parametrize("rule", ["bfdr_fixed", "gw", "bonferroni"])
def test_criterion_8b_abos_conditions(rule):
    assert criterion_8b(rule).passed


def test_criterion_8c_bfdr_conditions():
    assert criterion_8c().passed


@pytest.mark.parametrize("rule", ["bfdr_fixed", "gw", "bonferroni"])
def test_criterion_8d_closed_form_ratios(rule):
    assert criterion_8d(rule).passed


def test_criterion_8e_bh_monte_carlo():
    assert criterion_8e().passed


def test_criterion_9_negative_controls():
    assert criterion_9().passed


def test_criterion_10_determinism(tmp_path):
    assert criterion_10(tmp_path).passed


def main() -> int:
    import tempfile
    outcomes = [criterion_1(), criterion_2(), criterion_3(), criterion_4a(), criterion_4b(),
                criterion_4c(), criterion_5(), criterion_6(), criterion_7(), criterion_8a()]
    outcomes += [criterion_8b(r) for r in ("bfdr_fixed", "gw", "bonferroni")]
    outcomes.append(criterion_8c())
    outcomes += [criterion_8d(r) for r in ("bfdr_fixed", "gw", "bonferroni")]
    outcomes += [criterion_8e(), criterion_9()]
    with tempfile.TemporaryDirectory() as tmp:
        outcomes.append(criterion_10(Path(tmp)))
    n_pass = sum(o.passed for o in outcomes)
    print(f"{n_pass}/{len(outcomes)} acceptance checks passed")
    return 0 if n_pass == len(outcomes) else 1


if __name__ == "__main__":
    sys.exit(main())
