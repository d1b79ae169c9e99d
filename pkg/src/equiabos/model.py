"""Parameter records and the derived working scales.

Observations are ``X ~ N(mu, Sigma)`` with equicorrelated ``Sigma``
(variance ``sigma_eps_sq``, correlation ``rho``) and two-groups effects
``mu_i ~ N(0, sigma0_sq + theta_i * tau_sq)``, ``theta_i ~ Bernoulli(p)``.
Everything downstream works on the standardized scale ``sigma_sq =
sigma_eps_sq * (1 - rho) + sigma0_sq``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

from .exceptions import ParameterError

__all__ = [
    "DerivedScales",
    "LossParams",
    "ModelParams",
    "derive_scales",
    "validate_params",
]


@dataclass(frozen=True)
class ModelParams:
    m: int
    p: float
    sigma_eps_sq: float
    rho: float
    sigma0_sq: float
    tau_sq: float

    @property
    def sigma_sq(self) -> float:
        return self.sigma_eps_sq * (1.0 - self.rho) + self.sigma0_sq

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ParameterError([f"unknown model field {k!r}" for k in sorted(unknown)])
        missing = names - set(data)
        if missing:
            raise ParameterError([f"missing model field {k!r}" for k in sorted(missing)])
        return cls(**data)


@dataclass(frozen=True)
class LossParams:
    delta0: float = 1.0
    deltaA: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DerivedScales:
    """Working quantities of one parameter point.

    ``u = tau_sq / sigma_sq``, ``f = (1 - p) / p``, ``delta = delta0 /
    deltaA`` and ``v = u * f**2 * delta**2``. ``v`` is stored once so
    every consumer of ``log v`` sees the same number.
    """

    sigma_sq: float
    u: float
    f: float
    delta: float
    v: float

    @property
    def log_v(self) -> float:
        return math.log(self.v)


def _finite(x) -> bool:
    try:
        return math.isfinite(x)
    except TypeError:
        return False


def validate_params(params: ModelParams, losses: LossParams | None = None) -> list[str]:
    """Return every violated invariant as a message; empty means OK."""
    out = []
    m = params.m
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        out.append(f"m must be a positive integer, got {m!r}")
    if not (_finite(params.p) and 0.0 < params.p < 1.0):
        out.append(f"p must lie in (0,1), got {params.p!r}")
    if not (_finite(params.sigma_eps_sq) and params.sigma_eps_sq > 0.0):
        out.append(f"sigma_eps_sq must be > 0, got {params.sigma_eps_sq!r}")
    if not (_finite(params.rho) and 0.0 <= params.rho < 1.0):
        out.append(f"rho must lie in [0,1), got {params.rho!r}")
    if not (_finite(params.sigma0_sq) and params.sigma0_sq >= 0.0):
        out.append(f"sigma0_sq must be >= 0, got {params.sigma0_sq!r}")
    if not (_finite(params.tau_sq) and params.tau_sq > 0.0):
        out.append(f"tau_sq must be > 0, got {params.tau_sq!r}")
    if losses is not None:
        for name in ("delta0", "deltaA"):
            val = getattr(losses, name)
            if not (_finite(val) and val > 0.0):
                out.append(f"{name} must be > 0, got {val!r}")
    return out


def derive_scales(params: ModelParams, losses: LossParams) -> DerivedScales:
    violations = validate_params(params, losses)
    if violations:
        raise ParameterError(violations)
    sigma_sq = params.sigma_sq
    u = params.tau_sq / sigma_sq
    f = (1.0 - params.p) / params.p
    delta = losses.delta0 / losses.deltaA
    v = u * f * f * delta * delta
    scales = DerivedScales(sigma_sq=sigma_sq, u=u, f=f, delta=delta, v=v)
    if not all(math.isfinite(x) and x > 0 for x in (sigma_sq, u, f, delta, v)):
        raise ParameterError([f"derived scales not finite and positive: {scales}"])
    return scales
