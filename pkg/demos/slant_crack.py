"""Mixed-mode slant crack: both tips enriched, SIFs at the right tip.

    python demos/slant_crack.py 300 30
"""

import sys

from crackpinn.benchmarks import benchmark_case, run_seed

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 300
angle = float(sys.argv[2]) if len(sys.argv) > 2 else 45.0

case = benchmark_case("slant", iterations=iterations, angle=angle)
refs = case.references()
run, result = run_seed(case, seed=0)
print(f"slant angle {angle} deg, {iterations} iterations, best loss {run.best_loss:.3e}")
for name in ("K_I", "K_II"):
    ref = refs.get(name)
    tail = f"   reference {ref:.4f}" if ref is not None else ""
    print(f"{name:5s} extrapolated {run.values[name]:.4f}   enrichment {run.values[name + '_enrichment']:.4f}{tail}")

# both tips carry their own coefficients
for i, (kt1, kt2) in enumerate(result.model.ktilde()):
    print(f"tip {i}: K~_I = {kt1:.4f}, K~_II = {kt2:.4f}")
