"""Closed-form error rates and risk, plus Monte Carlo estimators.

The risk of a fixed-threshold rule is the additive expected loss
``m * [(1-p) delta0 t1 + p deltaA t2]``; the oracle cutoff minimizes it.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import numerics
from .data import generate, replicate_seed
from .exceptions import DomainError
from .model import DerivedScales, LossParams, ModelParams, derive_scales
from .thresholds import (
    RejectionSet,
    bfdr_of_threshold,
    bh_reject,
    fixed_threshold_reject,
    oracle_cutoff,
    rule_threshold,
)

__all__ = [
    "ConfusionCounts",
    "ErrorRates",
    "RiskSummary",
    "bayes_risk_fixed",
    "evaluate_rejections",
    "monte_carlo_metrics",
    "optimal_risk",
    "type_errors",
    "write_risk_csv",
]

MC_RULES = ("oracle", "bfdr_fixed", "gw", "bonferroni", "bh")
RISK_COLUMNS = ("rule", "m", "p", "u", "v", "alpha", "risk", "risk_se", "fdr",
                "fwer", "n_replicates")


@dataclass(frozen=True)
class ErrorRates:
    t1: float
    t2: float
    bfdr: float | None = None


def type_errors(c: float, u: float, p: float | None = None) -> ErrorRates:
    """Per-coordinate type I/II error of ``|Z/sigma| >= c``.

    ``t1 = 2(1 - Phi(c))``, ``t2 = 2 Phi(c / sqrt(u+1)) - 1``. With ``p``
    the Bayesian FDR is filled in as well.
    """
    if c < 0:
        raise DomainError("threshold c must be >= 0")
    if u < 0:
        raise DomainError("u must be >= 0")
    t1 = 2.0 * numerics.std_normal_sf(c)
    t2 = 1.0 - 2.0 * numerics.std_normal_sf(c / math.sqrt(u + 1.0))
    bfdr = None
    if p is not None:
        bfdr = bfdr_of_threshold(c, DerivedScales(1.0, u, (1 - p) / p, 1.0, 1.0), p)
    return ErrorRates(t1=t1, t2=t2, bfdr=bfdr)


def bayes_risk_fixed(c_sq: float, params: ModelParams, losses: LossParams) -> float:
    """Expected total loss of the rule ``(U/sigma)**2 >= c_sq``.

    ``c_sq < 0`` rejects everything; ``c_sq = inf`` rejects nothing.
    """
    scales = derive_scales(params, losses)
    m, p = params.m, params.p
    if c_sq < 0:
        return m * (1.0 - p) * losses.delta0
    if math.isinf(c_sq):
        return m * p * losses.deltaA
    err = type_errors(math.sqrt(c_sq), scales.u)
    return m * ((1.0 - p) * losses.delta0 * err.t1 + p * losses.deltaA * err.t2)


def optimal_risk(params: ModelParams, losses: LossParams) -> float:
    return bayes_risk_fixed(oracle_cutoff(derive_scales(params, losses)).c_sq, params, losses)


@dataclass(frozen=True)
class ConfusionCounts:
    v_false_rejections: int
    t_false_acceptances: int
    r_rejections: int
    m: int

    def loss(self, losses: LossParams) -> float:
        return losses.delta0 * self.v_false_rejections + losses.deltaA * self.t_false_acceptances


def evaluate_rejections(rejections: RejectionSet | np.ndarray, theta) -> ConfusionCounts:
    rej = rejections.rejected if isinstance(rejections, RejectionSet) else np.asarray(rejections)
    rej = rej.astype(bool)
    theta = np.asarray(theta).astype(bool)
    if rej.shape != theta.shape:
        raise DomainError(f"length mismatch: {rej.shape} vs {theta.shape}")
    return ConfusionCounts(
        v_false_rejections=int(np.count_nonzero(rej & ~theta)),
        t_false_acceptances=int(np.count_nonzero(~rej & theta)),
        r_rejections=int(np.count_nonzero(rej)),
        m=int(rej.size),
    )


@dataclass(frozen=True)
class RiskSummary:
    rule: str
    alpha: float | None
    risk: float
    fdr: float
    fwer: float
    mc_se_risk: float
    n_replicates: int
    fdr_se: float = 0.0
    fwer_se: float = 0.0
    mean_rejections: float = 0.0

    def to_row(self, params: ModelParams, losses: LossParams) -> tuple:
        sc = derive_scales(params, losses)
        alpha = "" if self.alpha is None else repr(float(self.alpha))
        return (self.rule, params.m, repr(float(params.p)), repr(sc.u), repr(sc.v), alpha,
                repr(self.risk), repr(self.mc_se_risk), repr(self.fdr), repr(self.fwer),
                self.n_replicates)


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _one_replicate(args):
    params, losses, rule, alpha, c_sq, seed, index, statistic = args
    data = generate(params, replicate_seed(seed, index))
    sigma = math.sqrt(params.sigma_sq)
    stat = data.u_centered if statistic == "u" else data.z
    if rule == "bh":
        rej = bh_reject(stat, sigma, alpha)
    else:
        rej = fixed_threshold_reject(stat, sigma, c_sq)
    cnt = evaluate_rejections(rej, data.theta)
    return (cnt.loss(losses), cnt.v_false_rejections / max(cnt.r_rejections, 1),
            float(cnt.v_false_rejections >= 1), float(cnt.r_rejections))


def monte_carlo_metrics(params: ModelParams, losses: LossParams, rule: str,
                        alpha: float | None, n_replicates: int, seed: int,
                        jobs: int = 1, statistic: str = "u") -> RiskSummary:
    """Monte Carlo risk, FDR and FWER of ``rule`` over seeded replicates.

    Replicate ``i`` uses :func:`equiabos.data.replicate_seed` ``(seed, i)``
    and sums are exactly rounded (``math.fsum``), so the summary does not
    depend on ``jobs``. ``statistic="z"`` applies the rule to the latent
    independent components instead of the centered observations.
    """
    if rule not in MC_RULES:
        raise DomainError(f"unknown rule {rule!r}; expected one of {MC_RULES}")
    if n_replicates < 2:
        raise DomainError("n_replicates must be at least 2")
    if statistic not in ("u", "z"):
        raise DomainError("statistic must be 'u' or 'z'")
    scales = derive_scales(params, losses)
    c_sq = None
    if rule != "bh":
        c_sq = rule_threshold(rule, scales, params.p, params.m, alpha).c_sq
    elif alpha is None:
        raise DomainError("rule 'bh' needs alpha")

    tasks = [(params, losses, rule, alpha, c_sq, seed, i, statistic)
             for i in range(n_replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_one_replicate, tasks, chunksize=max(1, n_replicates // (4 * jobs))))
    else:
        rows = [_one_replicate(t) for t in tasks]

    losses_, fdps, fw, rs = (list(col) for col in zip(*rows))
    risk, risk_se = _mean_se(losses_)
    fdr, fdr_se = _mean_se(fdps)
    fwer, fwer_se = _mean_se(fw)
    return RiskSummary(rule=rule, alpha=alpha, risk=risk, fdr=fdr, fwer=fwer,
                       mc_se_risk=risk_se, n_replicates=n_replicates, fdr_se=fdr_se,
                       fwer_se=fwer_se, mean_rejections=math.fsum(rs) / n_replicates)


def write_risk_csv(rows, path) -> None:
    """Write ``(RiskSummary, ModelParams, LossParams)`` triples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RISK_COLUMNS)
        for summary, params, losses in rows:
            w.writerow(summary.to_row(params, losses))
