"""Grid search with shared folds, then a side-by-side comparison table.

Run from the repository root:  python demos/03_cross_validation_grid.py
"""
import umtsvm as m
from umtsvm.evaluation import format_report_table

ds = m.synth_multitask(tasks=3, per_class=15, dimension=8, task_shift=1.0, noise=1.2, seed=0)

base_grid = {"c1": [2.0**-2, 1.0, 2.0**2], "mu1": [2.0**-2, 2.0**2]}
u_grid = {**base_grid, "c_u": [2.0**-4, 2.0**-1]}

rows = []
for method, grid in (("dmtsvm", base_grid), ("umtsvm", u_grid), ("mtls", base_grid), ("ls_umtsvm", u_grid)):
    spec = m.GridSpec(grid)
    hp, rep, table = m.grid_search(method, ds, spec, k=5, seed=0)
    extra = f" c_u={hp.c_u:g}" if "c_u" in grid else ""
    print(f"{method:<10} best of {spec.size:2d}: c1={hp.c1:g} mu1={hp.mu1:g}{extra}")
    rows.append((method, rep))

print()
print(format_report_table(rows))
