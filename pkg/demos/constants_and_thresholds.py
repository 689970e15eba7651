"""Closed-form constants and the boundedness threshold map.

Prints the Gamma-product constants for a few (n, s) pairs, then scans the
dimension axis: below n = 8 the extremal solution is bounded for every
fractional order, for n = 8 and 9 a critical order appears, and from n = 10
on the inequality fails for all s (matching the classical n >= 10 picture in
the s -> 1 limit).
"""

from fracgelfand import (
    ProblemParams,
    classify,
    critical_s,
    hardy_constant,
    lambda0,
    margin,
    operator_normalization,
    threshold_table,
    torsion_center_value,
)

print("constants for representative (n, s) pairs")
print(f"{'n':>3} {'s':>5} {'lambda0':>12} {'hardy':>12} {'c_ns':>12} {'torsion z(0)':>13}")
for n, s in ((1, 0.3), (2, 0.5), (3, 0.5), (9, 0.7), (10, 0.9), (12, 0.5)):
    p = ProblemParams(n, s)
    print(
        f"{n:>3} {s:>5.2f} {lambda0(p):>12.6f} {hardy_constant(p):>12.6f} "
        f"{operator_normalization(p):>12.6f} {torsion_center_value(p):>13.6f}"
    )

print("\nthreshold table (dimension -> critical fractional order)")
for row in threshold_table(12):
    if row.all_s_bounded:
        verdict = "bounded for every s"
    elif row.critical_s is not None:
        verdict = f"bounded for s > {row.critical_s:.6f}"
    else:
        verdict = "inequality fails for every s"
    print(f"  n = {row.n:>2}: {verdict}")

print("\nmargin ln(lambda0/H) along s for n = 8 (sign change at the threshold)")
for s in (0.1, 0.2, 0.28, 0.2821, 0.29, 0.5, 0.9):
    p = ProblemParams(8, s)
    print(f"  s = {s:<7} margin = {margin(p):+.6f}  ({classify(p).regime.value})")

root = critical_s(8)
print(f"\nbisection root for n = 8: s* = {root:.9f}")
