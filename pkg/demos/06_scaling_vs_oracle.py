"""Cost of the generating-function route against nested time integrals.

The oracle sums over every ordered tuple of jump times on a mesh, so its
cost for n photons grows as (mesh points)**n. The generating route costs a
handful of master-equation solves regardless of n.
"""

# %%
from zpgsim.experiments import mode_scaling, scaling_benchmark

rep = scaling_benchmark(n_max=3, rel_accuracy=5e-3)
print(f"reference p(3) = {rep.reference:.6f}")
for s in rep.sweep:
    print(f"{s['points_per_lifetime']:3d} pts/lifetime: {s['evaluations']:>9d} evaluations, "
          f"{s['seconds'] * 1e3:7.1f} ms, rel. error {s['rel_error']:.1e}")
print(f"ZPG: {rep.zpg_seconds * 1e3:.2f} ms at N = {rep.zpg_truncation} "
      f"(all-RK stepping: {rep.zpg_rk_seconds * 1e3:.1f} ms)")
print(f"speedup at matched accuracy: {rep.speedup:.0f}x")

# %% Runtime against the number of emitters, PNR vs threshold
for row in mode_scaling((1, 2, 3, 4)):
    print(row)
