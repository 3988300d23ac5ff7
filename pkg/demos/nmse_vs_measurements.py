"""
Accuracy under noise
====================

Mean NMSE of both solvers at 20 dB SNR as the number of measurements grows.
Trial j draws the same signal in every column of the table, so the
comparison is paired.
"""

from sblgamp.bench import SweepConfig, nmse_sweep

cfg = SweepConfig(kind="nmse", n=200, k=16, snr_db=20.0, trials=10, m_over_n=(0.3, 0.5, 0.7))
for r in nmse_sweep(cfg):
    g, e = r.stats["sbl_gamp"], r.stats["sbl_em"]
    print(f"M/N={r.m_over_n:.1f} (M={r.m:3d})  SBL-GAMP {g.mean_nmse_db:7.2f} dB  "
          f"SBL-EM {e.mean_nmse_db:7.2f} dB  failures {g.failures}/{e.failures}")
