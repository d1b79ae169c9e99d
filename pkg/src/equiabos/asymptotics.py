"""Parameter sequences in the sparse asymptotic framework and trend checks.

A sequence holds ``sigma_eps_sq``, ``rho``, ``sigma0_sq`` and the loss
ratio fixed, drives ``p_m`` by the sparsity regime and solves ``u_m`` from
``log(v_m) / u_m = C``. Limits are checked as finite-m trends: a
monotone approach along the grid plus a tolerance at the last point.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import numerics
from .exceptions import DomainError, NoSolutionError, SolverError
from .model import DerivedScales, LossParams, ModelParams, derive_scales
from .risk import bayes_risk_fixed, monte_carlo_metrics, optimal_risk
from .thresholds import rule_threshold

__all__ = [
    "CheckReport",
    "RegimeSpec",
    "SequencePoint",
    "Verdict",
    "bfdr_expansion",
    "build_sequence",
    "check_abos_conditions",
    "check_assumption1",
    "check_bfdr_conditions",
    "make_point",
    "risk_ratio_curve",
    "solve_u",
    "write_trace_csv",
]

CLOSED_FORM_RULES = ("oracle", "bfdr_fixed", "gw", "bonferroni")
ASSUMPTION_TOL = 0.05
ABOS_FINAL_TOL = 0.2
S_FINAL_TOL = 0.2
LOG_DELTA_P_FINAL_TOL = 0.1
U_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RegimeSpec:
    """How a sequence ``gamma_m`` is built along ``m_grid``.

    ``alpha`` is a constant level or a callable ``m -> alpha_m``.
    ``p_fn`` overrides the regime's ``p_m`` (e.g. ``log(m) / m`` for an
    unbounded ``m p_m``).
    """

    regime: str
    m_grid: tuple[int, ...]
    C: float
    delta: float = 1.0
    s_target: float | None = None
    c_p: float | None = None
    alpha: float | Callable[[int], float] = 0.05
    sigma_eps_sq: float = 1.0
    rho: float = 0.0
    sigma0_sq: float = 0.0
    p_fn: Callable[[int], float] | None = None

    def __post_init__(self):
        problems = []
        if self.regime not in ("extreme_sparse", "denser"):
            problems.append(f"unknown regime {self.regime!r}")
        if self.regime == "extreme_sparse" and self.p_fn is None:
            if self.s_target is None or not (0 < self.s_target < math.inf):
                problems.append("extreme_sparse needs a finite s_target > 0")
        if self.regime == "denser" and self.p_fn is None:
            if self.c_p is None or not (0 < self.c_p <= 1):
                problems.append("denser needs c_p in (0,1]")
        grid = list(self.m_grid)
        if not grid or any(int(m) != m or m < 1 for m in grid):
            problems.append("m_grid must be non-empty positive integers")
        elif any(b <= a for a, b in zip(grid, grid[1:])):
            problems.append("m_grid must be strictly increasing")
        if not (0 < self.C < math.inf):
            problems.append("C must lie in (0, inf)")
        if not self.delta > 0:
            problems.append("delta must be > 0")
        if problems:
            raise DomainError("; ".join(problems))

    def p_of(self, m: int) -> float:
        if self.p_fn is not None:
            return float(self.p_fn(m))
        if self.regime == "extreme_sparse":
            return self.s_target / m
        return float(m) ** (self.c_p - 1.0)

    def alpha_of(self, m: int) -> float:
        return float(self.alpha(m)) if callable(self.alpha) else float(self.alpha)


@dataclass
class SequencePoint:
    m: int
    params: ModelParams
    losses: LossParams
    alpha: float
    scales: DerivedScales
    diagnostics: dict = field(default_factory=dict)

    @property
    def p(self) -> float:
        return self.params.p


def solve_u(C: float, f: float, delta: float) -> tuple[float, float]:
    """Larger root of ``log(u f^2 delta^2) / u = C``; returns ``(u, residual)``.

    ``(log u + K) / u`` with ``K = 2 log(f delta)`` peaks at ``u = e^(1-K)``
    and decreases afterwards, so the large root is bracketed from there.
    """
    K = 2.0 * math.log(f * delta)

    def h(u):
        return (math.log(u) + K) / u - C

    lo = math.exp(1.0 - K)
    if h(lo) <= 0:
        raise NoSolutionError(
            f"log(u f^2 delta^2)/u = {C} has no root: its maximum "
            f"{h(lo) + C:.6g} at u={lo:.6g} is below C (f={f:.6g}, delta={delta})"
        )
    lo, hi = numerics.expand_bracket(h, lo, max(2.0 * lo, 1.0))
    u = numerics.bisect(h, numerics.RootBracket(lo, hi, tol=1e-13 * max(1.0, hi), max_iter=400))
    return u, abs(h(u))


def _r(alpha: float) -> float:
    return alpha / (1.0 - alpha)


def bfdr_expansion(scales: DerivedScales, alpha: float, C: float) -> dict:
    """Large-m expansion of the BFDR cutoff and its constants.

    ``c^2 ~ 2 log(f/r) - log(2 log(f/r)) + C1`` with ``C1 = log(2 / (pi
    D^2))`` and ``D = 2 (1 - Phi(sqrt C))``.
    """
    D = 2.0 * numerics.std_normal_sf(math.sqrt(C))
    C1 = math.log(2.0 / (math.pi * D * D))
    L = math.log(scales.f / _r(alpha))
    c_sq = 2.0 * L - math.log(2.0 * L) + C1 if L > 0.5 else math.nan
    return {"D": D, "C1": C1, "c_sq_expansion": c_sq}


def _s_terms(scales: DerivedScales, alpha: float) -> tuple[float, float]:
    f_over_r = scales.f / _r(alpha)
    if not f_over_r > 1.0:
        raise DomainError(f"f/r_alpha = {f_over_r:.6g} must exceed 1")
    log_fr = math.log(f_over_r)
    s = math.log(scales.f * scales.delta * math.sqrt(scales.u)) / log_fr - 1.0
    return s, 2.0 * s * log_fr - math.log(log_fr)


def _rule_c_sq(point: SequencePoint, rule) -> float:
    if callable(rule):
        return float(rule(point))
    return rule_threshold(rule, point.scales, point.p, point.m, point.alpha).c_sq


def make_point(m: int, params: ModelParams, losses: LossParams, alpha: float,
               rules: Sequence[str] = CLOSED_FORM_RULES) -> SequencePoint:
    """Assemble a point and fill whatever diagnostics are defined there."""
    scales = derive_scales(params, losses)
    pt = SequencePoint(m=m, params=params, losses=losses, alpha=alpha, scales=scales)
    d = pt.diagnostics
    d["log_v"] = scales.log_v
    d["log_v_over_u"] = scales.log_v / scales.u
    d["log_delta_over_p_over_m"] = math.log(scales.delta / params.p) / m
    try:
        d["s_m"], d["bfdr_divergence"] = _s_terms(scales, alpha)
    except DomainError:
        pass
    opt = optimal_risk(params, losses)
    for rule in rules:
        try:
            c_sq = _rule_c_sq(pt, rule)
        except (SolverError, DomainError):
            continue
        d[f"c_sq_{rule}"] = c_sq
        d[f"l_m_{rule}"] = c_sq - scales.log_v
        d[f"risk_ratio_{rule}"] = bayes_risk_fixed(c_sq, params, losses) / opt
    return pt


def build_sequence(spec: RegimeSpec) -> list[SequencePoint]:
    """Realize the asymptotic framework on ``spec.m_grid``.

    Raises :class:`NoSolutionError` naming the offending ``m`` when the
    ``u`` equation has no root there.
    """
    points = []
    sigma_sq = spec.sigma_eps_sq * (1.0 - spec.rho) + spec.sigma0_sq
    for m in spec.m_grid:
        m = int(m)
        p = spec.p_of(m)
        if not (0 < p < 1):
            raise DomainError(f"p_m = {p!r} outside (0,1) at m={m}")
        f = (1.0 - p) / p
        try:
            u, resid = solve_u(spec.C, f, spec.delta)
        except NoSolutionError as exc:
            raise NoSolutionError(f"m={m}: {exc}") from exc
        params = ModelParams(m=m, p=p, sigma_eps_sq=spec.sigma_eps_sq, rho=spec.rho,
                             sigma0_sq=spec.sigma0_sq, tau_sq=u * sigma_sq)
        losses = LossParams(delta0=spec.delta, deltaA=1.0)
        alpha = spec.alpha_of(m)
        pt = make_point(m, params, losses, alpha)
        pt.diagnostics["u_residual"] = resid
        pt.diagnostics["m_p"] = m * p
        pt.diagnostics["log_mp_over_log_m"] = math.log(m * p) / math.log(m) if m > 1 else math.nan
        try:
            pt.diagnostics.update(bfdr_expansion(pt.scales, alpha, spec.C))
        except (ValueError, DomainError):
            pass
        points.append(pt)
    return points


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CheckReport:
    checker: str
    verdicts: list[Verdict]
    trace: dict[str, list[float]]
    rule: str | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "checker": self.checker,
            "rule": self.rule,
            "passed": self.passed,
            "verdicts": [{"name": v.name, "result": "PASS" if v.passed else "FAIL",
                          "detail": v.detail} for v in self.verdicts],
            "trace": {k: [float(x) for x in xs] for k, xs in self.trace.items()},
        }


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def _strictly_increasing(xs) -> bool:
    return all(b > a for a, b in zip(xs, xs[1:]))


def _fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


def check_assumption1(points: Sequence[SequencePoint], C: float,
                      tol: float = ASSUMPTION_TOL) -> CheckReport:
    """Trend verdicts for ``p -> 0``, ``u -> inf``, ``v -> inf``, ``log v / u -> C``."""
    if len(points) < 3:
        raise DomainError("need at least 3 points")
    p = [pt.p for pt in points]
    u = [pt.scales.u for pt in points]
    log_v = [pt.scales.log_v for pt in points]
    ratio = [lv / uu for lv, uu in zip(log_v, u)]
    last_dev = abs(ratio[-1] / C - 1.0)
    verdicts = [
        Verdict("p_to_zero", _strictly_decreasing(p), f"p_m = {_fmt(p)}"),
        Verdict("u_to_infinity", _strictly_increasing(u), f"u_m = {_fmt(u)}"),
        Verdict("v_to_infinity", _strictly_increasing(log_v), f"log v_m = {_fmt(log_v)}"),
        Verdict("log_v_over_u_to_C", last_dev <= tol,
                f"|(log v/u)/C - 1| = {last_dev:.3g} at the last point (tol {tol})"),
    ]
    trace = {"m": [pt.m for pt in points], "p": p, "u": u, "log_v": log_v,
             "log_v_over_u": ratio}
    return CheckReport("assumption1", verdicts, trace)


def check_abos_conditions(points: Sequence[SequencePoint], rule,
                          final_tol: float = ABOS_FINAL_TOL) -> CheckReport:
    """Decompose ``c_sq = log v_m + l_m`` and check both conditions on ``l_m``.

    ``rule`` is a fixed-rule name or a callable ``point -> c_sq``.
    Verdicts: ``|l_m| / log v_m`` strictly decreasing with last value
    ``<= final_tol``; ``g_m = l_m + 2 log log v_m`` strictly increasing
    over the second half of the grid and ``g_last > g_first``.
    """
    if len(points) < 3:
        raise DomainError("need at least 3 points")
    l_m, rel, g = [], [], []
    for pt in points:
        lv = pt.scales.log_v
        if lv <= 1.0:
            raise DomainError(f"log v_m = {lv:.4g} <= 1 at m={pt.m}; log log v undefined")
        c_sq = _rule_c_sq(pt, rule)
        l_m.append(c_sq - lv)
        rel.append(abs(c_sq - lv) / lv)
        g.append(c_sq - lv + 2.0 * math.log(lv))
    half = len(points) // 2
    verdicts = [
        Verdict("l_m_small_o_log_v",
                _strictly_decreasing(rel) and rel[-1] <= final_tol,
                f"|l_m|/log v_m = {_fmt(rel)} (final tol {final_tol})"),
        Verdict("l_m_plus_2loglog_v_diverges",
                _strictly_increasing(g[half:]) and g[-1] > g[0],
                f"l_m + 2 log log v_m = {_fmt(g)}"),
    ]
    name = rule if isinstance(rule, str) else getattr(rule, "__name__", "custom")
    trace = {"m": [pt.m for pt in points], "l_m": l_m, "abs_l_over_log_v": rel, "g_m": g}
    return CheckReport("abos_conditions", verdicts, trace, rule=name)


def check_bfdr_conditions(points: Sequence[SequencePoint],
                          s_tol: float = S_FINAL_TOL,
                          ratio_tol: float = LOG_DELTA_P_FINAL_TOL) -> CheckReport:
    """Trend verdicts for the BFDR-rule conditions along the sequence.

    ``s_m`` solves ``log(f delta sqrt(u)) / log(f / r_alpha) = 1 + s_m``.
    Verdicts: ``|s_m|`` strictly decreasing, last ``<= s_tol``;
    ``2 s_m log(f/r) - log log(f/r)`` strictly decreasing and negative at
    the end; ``log(delta/p) / m`` strictly decreasing in magnitude, last
    ``<= ratio_tol``.
    """
    if len(points) < 3:
        raise DomainError("need at least 3 points")
    s, div, ldp = [], [], []
    for pt in points:
        s_m, d_m = _s_terms(pt.scales, pt.alpha)
        s.append(s_m)
        div.append(d_m)
        ldp.append(math.log(pt.scales.delta / pt.p) / pt.m)
    abs_s = [abs(x) for x in s]
    abs_ldp = [abs(x) for x in ldp]
    verdicts = [
        Verdict("s_m_to_zero", _strictly_decreasing(abs_s) and abs_s[-1] <= s_tol,
                f"s_m = {_fmt(s)} (final tol {s_tol})"),
        Verdict("divergence_to_minus_infinity",
                _strictly_decreasing(div) and div[-1] < 0,
                f"2 s_m log(f/r) - log log(f/r) = {_fmt(div)}"),
        Verdict("log_delta_over_p_is_o_m",
                _strictly_decreasing(abs_ldp) and abs_ldp[-1] <= ratio_tol,
                f"log(delta/p)/m = {_fmt(ldp)} (final tol {ratio_tol})"),
    ]
    trace = {"m": [pt.m for pt in points], "s_m": s, "divergence": div,
             "log_delta_over_p_over_m": ldp}
    return CheckReport("bfdr_conditions", verdicts, trace)


@dataclass(frozen=True)
class RatioPoint:
    m: int
    ratio: float
    se: float = 0.0


@dataclass(frozen=True)
class MonteCarloConfig:
    n_replicates: int
    seed: int
    jobs: int = 1


def _point_seed(master: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(1_000_003, int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def risk_ratio_curve(points: Sequence[SequencePoint], rule: str,
                     mc: MonteCarloConfig | None = None) -> list[RatioPoint]:
    """Risk of ``rule`` over the oracle risk at each point.

    Closed form for parameter-determined rules; ``"bh"`` is estimated by
    Monte Carlo on centered statistics and carries a standard error.
    """
    out = []
    for i, pt in enumerate(points):
        opt = optimal_risk(pt.params, pt.losses)
        if rule == "bh":
            if mc is None:
                raise DomainError("rule 'bh' needs a Monte Carlo config")
            summ = monte_carlo_metrics(pt.params, pt.losses, "bh", pt.alpha,
                                       mc.n_replicates, _point_seed(mc.seed, i), jobs=mc.jobs)
            out.append(RatioPoint(pt.m, summ.risk / opt, summ.mc_se_risk / opt))
        else:
            c_sq = _rule_c_sq(pt, rule)
            out.append(RatioPoint(pt.m, bayes_risk_fixed(c_sq, pt.params, pt.losses) / opt))
    return out


TRACE_COLUMNS = ("m", "rule", "p", "u", "v", "alpha", "log_v", "log_v_over_u", "c_sq",
                 "l_m", "g_m", "s_m", "bfdr_divergence", "log_delta_over_p_over_m",
                 "risk_ratio", "risk_ratio_se")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def write_trace_csv(points: Sequence[SequencePoint], curves: dict[str, list[RatioPoint]],
                    path) -> None:
    """One row per ``(m, rule)`` with the point diagnostics and the risk ratio."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for i, pt in enumerate(points):
            d = pt.diagnostics
            lv = pt.scales.log_v
            for rule, curve in curves.items():
                c_sq = d.get(f"c_sq_{rule}")
                l_m = None if c_sq is None else c_sq - lv
                g_m = None if l_m is None or lv <= 1 else l_m + 2 * math.log(lv)
                w.writerow([_cell(x) for x in (
                    pt.m, rule, pt.p, pt.scales.u, pt.scales.v, pt.alpha, lv,
                    d["log_v_over_u"], c_sq, l_m, g_m, d.get("s_m"), d.get("bfdr_divergence"),
                    d["log_delta_over_p_over_m"], curve[i].ratio, curve[i].se)])


def reports_to_json(reports: Sequence[CheckReport], path) -> None:
    payload = {"passed": all(r.passed for r in reports),
               "reports": [r.to_dict() for r in reports]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
