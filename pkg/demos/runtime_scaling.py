"""
Runtime versus problem size
===========================

With M = 0.4 N and K = 0.3 M, time both solvers over a short list of N and
fit the log-log slope. The exact E-step factors an N x N matrix every EM
iteration; GAMP only multiplies by A.
"""

import numpy as np

from sblgamp.bench import SweepConfig, runtime_sweep

cfg = SweepConfig(kind="runtime", n_list=(100, 200, 400), trials=3)
rows = runtime_sweep(cfg)

for r in rows:
    cells = "  ".join(f"{s}={r.stats[s].mean_time_s:.3f}s" for s in cfg.solvers)
    print(f"N={r.n:4d} M={r.m:4d} K={r.k:3d}  {cells}")

logn = np.log([r.n for r in rows])
for s in cfg.solvers:
    slope = np.polyfit(logn, np.log([r.stats[s].mean_time_s for r in rows]), 1)[0]
    print(f"{s}: time grows like N^{slope:.2f}")
