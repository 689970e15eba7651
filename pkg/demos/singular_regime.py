"""High-dimension behavior: branches that climb toward a singular profile.

For (n, s) = (12, 1/2) the Gamma inequality fails (classification is
inconclusive) and the branch behaves nothing like the low-dimension fold
picture: lambda increases monotonically to a plateau, every point stays
stable, and the ratio u(r) / (2s log(1/r)) near the origin grows with the
peak height, the signature of a log-divergent limit profile.  Separately,
the exact pair u = log r^{-2s} with its matching exterior data is pushed
through the operator as a consistency check: it reproduces lambda0 r^{-2s}
with residual vanishing under refinement.
"""

from fracgelfand import (
    ContinuationConfig,
    ProblemParams,
    RadialGrid,
    classify,
    hardy_constant,
    lambda0,
    singular_profile_diagnostic,
    singular_solution_residual,
    trace_branch,
)

p = ProblemParams(12, 0.5)
print(f"(n, s) = (12, 0.5): classification {classify(p).regime.value}")
print(f"lambda0 = {lambda0(p):.6f} <= H = {hardy_constant(p):.6f}")

cfg = ContinuationConfig(
    params=p, grid=RadialGrid.graded(192), peak_start=1.0, peak_end=7.0, peak_step=1.0
)
branch = trace_branch(cfg)
print(f"\n{'m':>4} {'lambda':>10} {'stability':>11}")
for pt in branch.points:
    print(f"{pt.peak:>4.0f} {pt.lam:>10.6f} {pt.stability_eig:>+11.4f}")
print(f"fold detected: {branch.fold_detected} (lambda plateaus, branch stays stable)")

report = singular_profile_diagnostic(branch, sigma=0.5)
print(f"\nratio u/(2s log(1/r)) at r = {report.probe_radius} for the three "
      f"highest peaks: " + ", ".join(f"{x:.5f}" for x in report.probe_ratios))
print(f"increasing with the peak: {report.increasing_trend}")
print(f"ratio exceeds 1 - sigma for all r <= {report.threshold_radius}")

print("\nexact log-power pair pushed through the operator (relative residual):")
for panels in (128, 256):
    res = singular_solution_residual(p, RadialGrid.graded(panels))
    print(f"  {panels:>4} panels: {res:.3e}")
