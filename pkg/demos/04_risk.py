"""
Bayes risk, exact and simulated
===============================

Closed-form risk of the fixed cutoffs next to Monte Carlo estimates,
including BH, which has no closed form.
"""

from equiabos import LossParams, ModelParams, derive_scales
from equiabos.risk import bayes_risk_fixed, monte_carlo_metrics, optimal_risk
from equiabos.thresholds import rule_threshold

params = ModelParams(m=5000, p=0.002, sigma_eps_sq=1.0, rho=0.4, sigma0_sq=0.0, tau_sq=60.0)
losses = LossParams(delta0=1.0, deltaA=1.0)
scales = derive_scales(params, losses)
alpha = 0.05

print(f"oracle risk {optimal_risk(params, losses):.4f}")
print(f"never reject {bayes_risk_fixed(float('inf'), params, losses):.1f}, "
      f"always reject {bayes_risk_fixed(-1.0, params, losses):.1f}")

for rule in ("oracle", "bfdr_fixed", "gw", "bonferroni", "bh"):
    a = None if rule == "oracle" else alpha
    mc = monte_carlo_metrics(params, losses, rule, a, n_replicates=300, seed=4)
    exact = ""
    if rule != "bh":
        exact = f"  exact {bayes_risk_fixed(rule_threshold(rule, scales, params.p, params.m, a).c_sq, params, losses):.3f}"
    print(f"{rule:11s} risk {mc.risk:.3f} ± {mc.mc_se_risk:.3f}{exact}  "
          f"FDR {mc.fdr:.3f}  FWER {mc.fwer:.3f}")
