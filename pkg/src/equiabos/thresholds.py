"""Rejection rules on standardized centered statistics ``U_i / sigma``.

Every cutoff is reported as ``c_sq``, a squared threshold on the
``(U_i / sigma)**2`` scale. Fixed rules (oracle, BFDR, GW, Bonferroni)
depend only on the parameters; BH is data dependent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import numerics
from .exceptions import DomainError, NoSolutionError
from .model import DerivedScales

__all__ = [
    "FIXED_RULES",
    "RejectionSet",
    "ThresholdResult",
    "bfdr_of_threshold",
    "bfdr_threshold",
    "bh_pvalues",
    "bh_random_threshold",
    "bh_reject",
    "bonferroni_expansion",
    "bonferroni_threshold",
    "fixed_threshold_reject",
    "gw_fdr_of_threshold",
    "gw_threshold",
    "oracle_cutoff",
    "rule_threshold",
    "write_thresholds_csv",
]

RULE_NAMES = ("oracle", "bfdr_fixed", "gw", "bonferroni_exact",
              "bonferroni_expansion", "bh_random")
# Rules whose cutoff is a function of the parameters alone.
FIXED_RULES = ("oracle", "bfdr_fixed", "gw", "bonferroni", "bonferroni_expansion")
THRESHOLD_COLUMNS = ("rule", "c_sq", "always_reject", "solver_residual")

SOLVER_TOL = 1e-12
INITIAL_HI = 10.0
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class ThresholdResult:
    rule: str
    c_sq: float
    always_reject: bool
    solver_residual: float = 0.0

    @property
    def c(self) -> float:
        """Unsquared cutoff; 0 when the rule always rejects."""
        return math.sqrt(self.c_sq) if self.c_sq > 0 else 0.0

    def to_row(self) -> tuple:
        return (self.rule, repr(float(self.c_sq)), str(self.always_reject).lower(),
                repr(float(self.solver_residual)))


@dataclass(frozen=True, eq=False)
class RejectionSet:
    rejected: np.ndarray
    count: int

    @classmethod
    def from_mask(cls, mask) -> "RejectionSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(rejected=mask, count=int(mask.sum()))


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0,1), got {alpha!r}")


def _check_sigma(sigma):
    if not (math.isfinite(sigma) and sigma > 0):
        raise DomainError(f"sigma must be positive and finite, got {sigma!r}")


def oracle_cutoff(scales: DerivedScales) -> ThresholdResult:
    """Bayes oracle: ``(1 + 1/u) * (log v + log(1 + 1/u))``.

    Negative values are legitimate (the likelihood ratio exceeds the
    loss-weighted prior odds everywhere) and flag ``always_reject``.
    """
    u, v = scales.u, scales.v
    if not (u > 0 and v > 0):
        raise DomainError("oracle cutoff needs u > 0 and v > 0")
    inner = math.log(v) + math.log1p(1.0 / u)
    c_sq = (1.0 + 1.0 / u) * inner
    return ThresholdResult("oracle", c_sq, always_reject=inner < 0)


def fixed_threshold_reject(u_centered, sigma: float, c_sq: float) -> RejectionSet:
    """Reject where ``(u_i / sigma)**2 >= c_sq``."""
    _check_sigma(sigma)
    stat = (np.asarray(u_centered, dtype=float) / sigma) ** 2
    if c_sq < 0:
        return RejectionSet.from_mask(np.ones(stat.shape, dtype=bool))
    return RejectionSet.from_mask(stat >= c_sq)


def _log_tail_ratio(c: float, u: float) -> float:
    # log[(1 - Phi(c)) / (1 - Phi(c / sqrt(u + 1)))], <= 0 and decreasing in c.
    return numerics.log_std_normal_sf(c) - numerics.log_std_normal_sf(c / math.sqrt(u + 1.0))


def _solve_decreasing(g, what: str) -> float:
    # g(0) > 0 and g decreases to -inf; grow [0, hi] until it brackets a root.
    try:
        lo, hi = numerics.expand_bracket(g, 0.0, INITIAL_HI, MAX_DOUBLINGS)
    except numerics.BracketError as exc:
        raise NoSolutionError(f"{what}: {exc}") from exc
    return numerics.bisect(g, numerics.RootBracket(lo, hi, tol=SOLVER_TOL, max_iter=400))


def bfdr_of_threshold(c: float, scales: DerivedScales, p: float) -> float:
    """Bayesian FDR of the rule ``|U/sigma| >= c``.

    ``(1-p) t1 / ((1-p) t1 + p (1 - t2))`` with ``t1 = 2(1 - Phi(c))`` and
    ``1 - t2 = 2(1 - Phi(c / sqrt(u+1)))``, evaluated on the log-odds
    scale so it stays accurate when both tails underflow.
    """
    if c < 0:
        raise DomainError("threshold c must be >= 0")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0,1), got {p!r}")
    log_odds = math.log1p(-p) - math.log(p) + _log_tail_ratio(c, scales.u)
    return float(special.expit(log_odds))


def bfdr_threshold(alpha: float, scales: DerivedScales) -> ThresholdResult:
    """Solve ``(1-Phi(c)) / (1-Phi(c/sqrt(u+1))) = r_alpha / f``.

    ``r_alpha = alpha / (1 - alpha)``. The tail ratio equals 1 at c = 0
    and falls to 0, so a positive root exists iff ``r_alpha / f < 1``.
    ``solver_residual`` is the residual of the log form of the equation.
    """
    _check_alpha(alpha)
    log_target = math.log(alpha) - math.log1p(-alpha) - math.log(scales.f)
    if log_target >= 0:
        raise NoSolutionError(
            f"BFDR equation has no root: r_alpha/f = {math.exp(log_target):.6g} >= 1"
        )
    if not scales.u > 0:
        raise NoSolutionError("BFDR equation has no root for u <= 0")

    def g(c):
        return _log_tail_ratio(c, scales.u) - log_target

    c = _solve_decreasing(g, "bfdr_threshold")
    return ThresholdResult("bfdr_fixed", c * c, always_reject=False, solver_residual=abs(g(c)))


def _gw_log_lhs(c: float, u: float, p: float) -> float:
    d = -_log_tail_ratio(c, u)
    return -float(np.logaddexp(math.log1p(-p), math.log(p) + d))


def gw_fdr_of_threshold(c: float, scales: DerivedScales, p: float) -> float:
    """Left side of the GW fixed-point equation at cutoff ``c``."""
    if c < 0:
        raise DomainError("threshold c must be >= 0")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0,1), got {p!r}")
    return math.exp(_gw_log_lhs(c, scales.u, p))


def gw_threshold(alpha: float, scales: DerivedScales, p: float) -> ThresholdResult:
    """Large-m limit of the BH threshold (Genovese-Wasserman).

    Solves ``(1-Phi(c)) / ((1-p)(1-Phi(c)) + p(1-Phi(c/sqrt(u+1)))) = alpha``.
    The left side is 1 at c = 0 and decreases to 0 when ``u > 0``.
    """
    _check_alpha(alpha)
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0,1), got {p!r}")
    if not scales.u > 0:
        raise NoSolutionError("GW equation has no root for u <= 0 (left side is 1)")
    log_alpha = math.log(alpha)

    def g(c):
        return _gw_log_lhs(c, scales.u, p) - log_alpha

    c = _solve_decreasing(g, "gw_threshold")
    return ThresholdResult("gw", c * c, always_reject=False, solver_residual=abs(g(c)))


def _check_m(m):
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")


def bonferroni_threshold(alpha: float, m: int) -> ThresholdResult:
    """Exact two-sided Bonferroni cutoff, ``1 - Phi(c) = alpha / (2m)``."""
    _check_alpha(alpha)
    _check_m(m)
    c = numerics.std_normal_isf(alpha / (2.0 * m))
    return ThresholdResult("bonferroni_exact", c * c, always_reject=False)


def bonferroni_expansion(alpha: float, m: int) -> ThresholdResult:
    """Large-m form ``2 L - log(2 L) + log(2/pi)`` with ``L = log(m/alpha)``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    _check_m(m)
    two_l = 2.0 * math.log(m / alpha)
    if not two_l > 1.0:
        raise DomainError(f"expansion needs 2 log(m/alpha) > 1, got {two_l:.6g}")
    c_sq = two_l - math.log(two_l) + math.log(2.0 / math.pi)
    return ThresholdResult("bonferroni_expansion", c_sq, always_reject=c_sq < 0)


def bh_pvalues(u_centered, sigma: float) -> np.ndarray:
    """Two-sided p-values ``2 (1 - Phi(|u| / sigma))`` under the null."""
    _check_sigma(sigma)
    s = np.abs(np.asarray(u_centered, dtype=float)) / sigma
    return special.erfc(s / math.sqrt(2.0))


def bh_reject(u_centered, sigma: float, alpha: float) -> RejectionSet:
    """Benjamini-Hochberg step-up at level ``alpha``.

    ``k = max{i : p_(i) <= i alpha / m}``; every hypothesis with
    ``p <= p_(k)`` is rejected, so tied p-values go together.
    """
    _check_alpha(alpha)
    pv = bh_pvalues(u_centered, sigma)
    m = pv.size
    if m == 0:
        return RejectionSet.from_mask(np.zeros(0, dtype=bool))
    sorted_p = np.sort(pv, kind="stable")
    below = sorted_p <= alpha * np.arange(1, m + 1) / m
    if not below.any():
        return RejectionSet.from_mask(np.zeros(m, dtype=bool))
    k = int(np.flatnonzero(below)[-1])
    return RejectionSet.from_mask(pv <= sorted_p[k])


def bh_random_threshold(u_centered, sigma: float, alpha: float) -> ThresholdResult:
    """BH written as a data-dependent cutoff ``min(c_Bon, c_tilde)``.

    ``c_tilde = inf{y : 2(1 - Phi(y)) / (1 - F_m(y)) <= alpha}`` where
    ``1 - F_m(y)`` is the fraction of ``|u_i| / sigma`` at or above y.
    The empirical tail is a step function; on each step the condition
    holds on a half-line, and the infimum sits on the lowest step where
    it holds at all.
    """
    _check_alpha(alpha)
    _check_sigma(sigma)
    s = np.abs(np.asarray(u_centered, dtype=float)) / sigma
    m = s.size
    c_bon = math.sqrt(bonferroni_threshold(alpha, m).c_sq) if m else math.inf

    levels, counts = np.unique(s, return_counts=True)
    levels, counts = levels[::-1], counts[::-1]          # descending
    n_at_or_above = np.cumsum(counts)                    # 1 - F_m at each level, times m
    tail = special.erfc(levels / math.sqrt(2.0))         # 2 (1 - Phi(level))
    feasible = tail <= alpha * n_at_or_above / m
    if not feasible.any():
        c_tilde = math.inf
    else:
        j = int(np.flatnonzero(feasible)[-1])
        n = int(n_at_or_above[j])
        y_star = numerics.std_normal_isf(alpha * n / (2.0 * m))
        lower = float(levels[j + 1]) if j + 1 < levels.size else -math.inf
        # y_star <= levels[j] in exact arithmetic; min() only absorbs rounding.
        c_tilde = min(max(lower, y_star), float(levels[j]))
    c_bh = min(c_bon, c_tilde)
    return ThresholdResult("bh_random", c_bh * c_bh, always_reject=False)


def rule_threshold(rule: str, scales: DerivedScales, p: float, m: int,
                   alpha: float | None = None) -> ThresholdResult:
    """Cutoff of a parameter-determined rule by name."""
    if rule == "oracle":
        return oracle_cutoff(scales)
    if alpha is None:
        raise DomainError(f"rule {rule!r} needs alpha")
    if rule == "bfdr_fixed":
        return bfdr_threshold(alpha, scales)
    if rule == "gw":
        return gw_threshold(alpha, scales, p)
    if rule in ("bonferroni", "bonferroni_exact"):
        return bonferroni_threshold(alpha, m)
    if rule == "bonferroni_expansion":
        return bonferroni_expansion(alpha, m)
    raise DomainError(f"unknown fixed rule {rule!r}")


def write_thresholds_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(THRESHOLD_COLUMNS)
        for res in results:
            w.writerow(res.to_row())
