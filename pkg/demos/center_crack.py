"""Centre crack in a plate under remote tension.

Trains the enriched network on the right half of the plate, split along
the crack line into two subdomains, then extracts K_I by displacement
extrapolation and compares with the closed-form finite-width value.  The iteration count is the only argument;
the full budget of 2500 takes a few minutes on one core.

    python demos/center_crack.py 300
"""

import sys

from crackpinn.benchmarks import benchmark_case, exact_center_crack_K, relative_error, run_seed

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 300
case = benchmark_case("center-tension", iterations=iterations)
geo = case.geometry()
print(f"plate half-width {case.b}, half-height {case.h}, crack half-length {case.a}")
print(f"tips: {geo.tip_positions}")
counts = case.problem().collocation().counts
print("collocation:", counts)

run, result = run_seed(case, seed=0)
for rec in result.log[:: max(1, len(result.log) // 8)]:
    print(f"  iter {rec.iteration:5d} [{rec.phase:>6}] loss {rec.loss.total:.3e}")

print("\nK_I*(r) behind the tip")
for s in run.kstar[::2]:
    print(f"  r/a = {s.r / case.a:.3f}   K_I* = {s.k1_star:.4f}")

exact = exact_center_crack_K(case.load, case.a, case.b)
print(f"\nK_I extrapolated   {run.values['K_I']:.4f}")
print(f"K_I from K~ coeff. {run.values['K_I_enrichment']:.4f}")
print(f"K_I closed form    {exact:.4f}   (rel. err {relative_error(run.values['K_I'], exact):.2e})")
