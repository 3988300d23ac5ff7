"""
Locating the phase transition
=============================

For a few undersampling ratios M/N, bisect on the sparsity K to find where
the empirical success rate crosses one half. The run is scaled down
(N=100, 10 trials per probe); ``sblgamp phase`` runs the full sweep.
"""

from sblgamp import EmOptions
from sblgamp.bench import SweepConfig, phase_transition

cfg = SweepConfig(kind="phase", n=100, m_over_n=(0.2, 0.4, 0.6), trials=10,
                  em=EmOptions(max_em_iters=100), master_seed=1)

# every probe is a batch of seeded trials; the same seeds serve both solvers
rows = phase_transition(cfg)
print(f"{'solver':9s} {'M/N':>5s} {'K/M at 0.5':>11s} {'probes':>7s}")
for r in rows:
    flag = "" if r.bracketed else "  (not bracketed)"
    print(f"{r.solver:9s} {r.m_over_n:5.2f} {r.k_over_m_half:11.3f} {r.probes:7d}{flag}")
