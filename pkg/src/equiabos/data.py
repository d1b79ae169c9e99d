"""Seeded synthetic data through the equicorrelation decomposition.

An equicorrelated Gaussian vector with variance ``s2`` and correlation
``rho`` has the law of ``Z + Q * 1`` with independent ``Z_i ~ N(mu_i,
s2 * (1 - rho))`` and a shared ``Q ~ N(0, s2 * rho)``. Sampling is
therefore O(m) and never touches an m x m covariance. The shared part
cancels in the centered statistics ``U_i = X_i - mean(X) = Z_i - mean(Z)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DomainError, ParameterError
from .model import ModelParams, validate_params

__all__ = [
    "Dataset",
    "MomentReport",
    "center",
    "empirical_moments",
    "generate",
    "replicate_seed",
    "write_dataset_csv",
]

DATASET_COLUMNS = ("index", "theta", "mu", "z", "x", "u")


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for replicate ``index`` of a run with ``master_seed``.

    Mixing is numpy's ``SeedSequence`` hash with ``spawn_key=(index,)``,
    i.e. the same stream ``SeedSequence(master_seed).spawn(...)`` hands
    to child ``index``. The result depends only on the pair, never on
    the order replicates are produced in.
    """
    if index < 0:
        raise DomainError("replicate index must be non-negative")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


@dataclass(frozen=True, eq=False)
class Dataset:
    theta: np.ndarray
    mu: np.ndarray
    z: np.ndarray
    q: float
    x: np.ndarray
    u_centered: np.ndarray
    seed: object = None

    @property
    def m(self) -> int:
        return self.x.shape[0]


def center(x) -> np.ndarray:
    """Subtract the arithmetic mean."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("center needs a non-empty 1-d vector")
    return x - x.mean()


def generate(params: ModelParams, seed) -> Dataset:
    """Draw one realization ``(theta, mu, Z, Q, X, U)``.

    ``seed`` is an int or a :class:`numpy.random.SeedSequence`; equal
    ``(params, seed)`` give bit-identical output.
    """
    violations = validate_params(params)
    if violations:
        raise ParameterError(violations)
    rng = np.random.default_rng(seed)
    m = params.m
    theta = rng.random(m) < params.p
    mu_sd = np.sqrt(params.sigma0_sq + params.tau_sq * theta)
    mu = mu_sd * rng.standard_normal(m)
    z = mu + math.sqrt(params.sigma_eps_sq * (1.0 - params.rho)) * rng.standard_normal(m)
    q_draw = rng.standard_normal()
    q = math.sqrt(params.sigma_eps_sq * params.rho) * q_draw if params.rho > 0 else 0.0
    x = z + q
    return Dataset(theta=theta, mu=mu, z=z, q=q, x=x, u_centered=center(x), seed=seed)


def write_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DATASET_COLUMNS)
        for i in range(dataset.m):
            w.writerow((i, int(dataset.theta[i]), repr(float(dataset.mu[i])),
                        repr(float(dataset.z[i])), repr(float(dataset.x[i])),
                        repr(float(dataset.u_centered[i]))))


@dataclass(frozen=True)
class MomentReport:
    """Deviations of replicate moments from the model's marginal law.

    The ``*_dev`` fields are maxima of absolute deviations over the
    tracked coordinates or pairs; the ``max_*_z`` fields are the same
    deviations divided by their Monte Carlo standard errors.
    """

    mean_abs_dev: float
    var_dev: float
    offdiag_cov_dev: float
    n_replicates: int
    max_mean_z: float
    max_var_z: float
    max_cov_z: float
    target_var: float
    target_cov: float


def empirical_moments(params: ModelParams, n_replicates: int,
                      tracked_pairs: Sequence[tuple[int, int]], seed: int) -> MomentReport:
    """Compare pooled replicate moments of X with the equicorrelated law.

    Targets: ``E X_i = 0``, ``Var X_i = sigma0_sq + p * tau_sq +
    sigma_eps_sq`` and ``Cov(X_i, X_j) = sigma_eps_sq * rho``.
    """
    if n_replicates < 2:
        raise DomainError("n_replicates must be at least 2")
    pairs = [tuple(int(k) for k in pr) for pr in tracked_pairs]
    if not pairs:
        raise DomainError("tracked_pairs must not be empty")
    for i, j in pairs:
        if i == j or not (0 <= i < params.m and 0 <= j < params.m):
            raise DomainError(f"invalid index pair ({i}, {j}) for m={params.m}")
    idx = sorted({k for pr in pairs for k in pr})
    col = {k: c for c, k in enumerate(idx)}

    samples = np.empty((n_replicates, len(idx)))
    for r in range(n_replicates):
        samples[r] = generate(params, replicate_seed(seed, r)).x[idx]

    n = n_replicates
    target_var = params.sigma0_sq + params.p * params.tau_sq + params.sigma_eps_sq
    target_cov = params.sigma_eps_sq * params.rho

    means = samples.mean(axis=0)
    dev = samples - means
    mean_se = samples.std(axis=0, ddof=1) / math.sqrt(n)
    sq = dev * dev
    variances = sq.sum(axis=0) / (n - 1)
    var_se = sq.std(axis=0, ddof=1) / math.sqrt(n)

    cov_dev, cov_z = [], []
    for i, j in pairs:
        prod = dev[:, col[i]] * dev[:, col[j]]
        cov = prod.sum() / (n - 1)
        se = prod.std(ddof=1) / math.sqrt(n)
        cov_dev.append(abs(cov - target_cov))
        cov_z.append(abs(cov - target_cov) / se if se > 0 else math.inf)

    def zmax(d, se):
        with np.errstate(divide="ignore", invalid="ignore"):
            zs = np.where(se > 0, d / se, np.where(d > 0, np.inf, 0.0))
        return float(np.max(zs))

    return MomentReport(
        mean_abs_dev=float(np.max(np.abs(means))),
        var_dev=float(np.max(np.abs(variances - target_var))),
        offdiag_cov_dev=float(max(cov_dev)),
        n_replicates=n,
        max_mean_z=zmax(np.abs(means), mean_se),
        max_var_z=zmax(np.abs(variances - target_var), var_se),
        max_cov_z=float(max(cov_z)),
        target_var=target_var,
        target_cov=target_cov,
    )
