"""Scalar kernels: standard normal CDF, tails, quantiles and bisection.

The CDF goes through the complementary error function on both sides of
zero, so lower and upper tails keep full relative precision. Quantiles
start from Acklam's rational approximation and are polished by Newton
steps against the same CDF, which keeps ``cdf(quantile(p)) == p`` to
about one ulp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .exceptions import BracketError, ConvergenceError, DomainError

__all__ = [
    "RootBracket",
    "bisect",
    "expand_bracket",
    "log_std_normal_sf",
    "std_normal_cdf",
    "std_normal_isf",
    "std_normal_pdf",
    "std_normal_quantile",
    "std_normal_sf",
]

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_finite(x):
    if np.ndim(x) == 0:
        if not math.isfinite(float(x)):
            raise DomainError(f"argument must be finite, got {x!r}")
    elif not np.all(np.isfinite(x)):
        raise DomainError("argument must be finite")


def std_normal_cdf(x):
    """Standard normal CDF, for a float or an array."""
    _check_finite(x)
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def std_normal_sf(x):
    """Upper tail ``1 - Phi(x)`` without cancellation."""
    _check_finite(x)
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def log_std_normal_sf(x):
    """``log(1 - Phi(x))``, finite far beyond the underflow of the tail."""
    _check_finite(x)
    if np.ndim(x) == 0:
        return float(special.log_ndtr(-float(x)))
    return special.log_ndtr(-np.asarray(x, dtype=float))


def std_normal_pdf(x):
    if np.ndim(x) == 0:
        x = float(x)
        return math.exp(-0.5 * x * x - _LOG_SQRT_2PI)
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x - _LOG_SQRT_2PI)


# Acklam's coefficients, relative error about 1.15e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def _lower_quantile(p: float) -> float:
    # p <= 0.5; refine on the lower tail where the CDF is relatively exact.
    x = _acklam(p)
    for _ in range(4):
        dens = std_normal_pdf(x)
        if dens == 0.0:
            break
        err = std_normal_cdf(x) - p
        # Halley step for the normal CDF: f''/f' = -x.
        step = err / dens
        x_new = x - step / (1.0 + 0.5 * x * step)
        if x_new == x:
            break
        x = x_new
    return x


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return _lower_quantile(p)
    # 1 - p is exact for p in [0.5, 1).
    return -_lower_quantile(1.0 - p)


def std_normal_isf(q: float) -> float:
    """Upper quantile: the ``x`` with ``1 - Phi(x) = q``.

    Preferable to ``std_normal_quantile(1 - q)`` for tiny ``q``, where
    forming ``1 - q`` already loses the digits that matter.
    """
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"upper quantile needs 0 < q < 1, got {q!r}")
    return -std_normal_quantile(q)


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError("bracket ends must be finite")
        if not self.lo < self.hi:
            raise DomainError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not self.tol > 0:
            raise DomainError("bracket tolerance must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be positive")


def bisect(f: Callable[[float], float], bracket: RootBracket) -> float:
    """Find a root of ``f`` inside ``bracket`` by bisection.

    Stops once the bracket is narrower than ``bracket.tol`` (or cannot be
    split further in floating point) and returns its midpoint. An exact
    zero at an endpoint or midpoint is returned immediately.

    Raises
    ------
    BracketError
        ``f(lo)`` and ``f(hi)`` have the same sign.
    ConvergenceError
        ``max_iter`` halvings did not reach the tolerance.
    """
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if math.isnan(f_lo) or math.isnan(f_hi):
        raise BracketError(f"f is NaN at the bracket ends [{lo}, {hi}]")
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}"
        )
    for _ in range(bracket.max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < bracket.tol or mid <= lo or mid >= hi:
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if hi - lo < bracket.tol:
        return mid
    raise ConvergenceError(
        f"bisection did not reach tol={bracket.tol} in {bracket.max_iter} steps",
        best=mid,
    )


def expand_bracket(f: Callable[[float], float], lo: float, hi: float,
                   max_doublings: int = 60) -> tuple[float, float]:
    """Double ``hi`` until ``f`` changes sign on ``[lo, hi]``."""
    f_lo = f(lo)
    for _ in range(max_doublings + 1):
        f_hi = f(hi)
        if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0) != (f_hi > 0):
            return lo, hi
        hi *= 2.0
    raise BracketError(
        f"no sign change found up to hi={hi / 2.0:.6g} "
        f"(f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g})"
    )
