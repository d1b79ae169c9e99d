"""
Comparing fixed cutoffs
=======================

The oracle cutoff has a closed form. The BFDR and GW cutoffs solve
implicit tail equations by bisection, and Bonferroni inverts a tail
probability.
"""

from equiabos import LossParams, ModelParams, derive_scales
from equiabos.thresholds import (bfdr_of_threshold, bfdr_threshold, bonferroni_expansion,
                                 bonferroni_threshold, gw_threshold, oracle_cutoff)

params = ModelParams(m=100_000, p=1e-4, sigma_eps_sq=1.0, rho=0.3, sigma0_sq=0.0, tau_sq=40.0)
scales = derive_scales(params, LossParams())
print(f"u = {scales.u:.3f}, v = {scales.v:.4g}, log v = {scales.log_v:.3f}")

alpha = 0.05
rows = [oracle_cutoff(scales),
        bfdr_threshold(alpha, scales),
        gw_threshold(alpha, scales, params.p),
        bonferroni_threshold(alpha, params.m),
        bonferroni_expansion(alpha, params.m)]
for r in rows:
    print(f"{r.rule:22s} c^2 = {r.c_sq:9.5f}   residual = {r.solver_residual:.1e}")

# the BFDR cutoff reproduces its target level
b = rows[1]
print("BFDR at its own cutoff:", bfdr_of_threshold(b.c, scales, params.p))
