"""
Following a sparse sequence toward optimality
=============================================

Build a sequence with m p_m = 1 and log(v_m) / u_m = 2, then watch the
checkers and the risk ratios. With a fixed level the fixed-level rules
stall; letting alpha shrink like 1 / log m makes every check pass.
"""

import math

from equiabos import asymptotics as asy

grid = (100, 1000, 10_000, 100_000, 1_000_000)


def show(alpha, label):
    spec = asy.RegimeSpec("extreme_sparse", grid, C=2.0, s_target=1.0, delta=1.0, alpha=alpha)
    pts = asy.build_sequence(spec)
    print(f"\n{label}")
    print("  u_m:", ", ".join(f"{pt.scales.u:.2f}" for pt in pts))
    reports = [asy.check_assumption1(pts, 2.0)]
    reports += [asy.check_abos_conditions(pts, r) for r in ("oracle", "bfdr_fixed", "bonferroni")]
    reports.append(asy.check_bfdr_conditions(pts))
    for rep in reports:
        tag = rep.checker + (f"[{rep.rule}]" if rep.rule else "")
        bad = [v.name for v in rep.verdicts if not v.passed]
        print(f"  {tag:30s} {'PASS' if rep.passed else 'FAIL ' + ', '.join(bad)}")
    for rule in ("bfdr_fixed", "bonferroni"):
        ratios = asy.risk_ratio_curve(pts, rule)
        print(f"  risk ratio {rule:11s}", ", ".join(f"{r.ratio:.4f}" for r in ratios))


show(0.05, "constant alpha = 0.05")
show(lambda m: 0.05 * math.log(100) / math.log(m), "alpha_m = 0.05 log(100) / log(m)")
