import math
from dataclasses import replace

import numpy as np
import pytest

from sblgamp import DomainError, TrialSpec, derive_seed
from sblgamp.bench import (SweepConfig, TrialResult, fmean, nmse_sweep, phase_contour,
                           phase_transition, run_trial, run_trials, runtime_dims, runtime_sweep,
                           success_rate, summarize)
from sblgamp.options import EmOptions


def _result(success, nmse=0.0, failed=False, t=1.0):
    return TrialResult(TrialSpec(4, 2, 1), "sbl_gamp", nmse, success, t, 1, 1, True, False, failed)


@pytest.mark.parametrize("flags, rate", [([True] * 4, 1.0), ([False] * 3, 0.0), ([True, False] * 5, 0.5)])
def test_success_rate(flags, rate):
    assert success_rate(_result(f) for f in flags) == rate


def test_success_rate_empty():
    with pytest.raises(DomainError):
        success_rate([])


def test_fmean_is_order_independent():
    vals = [1e16, 1.0, -1e16, 3.0] * 7
    assert fmean(vals) == fmean(reversed(vals)) == 4.0 * 7 / 28
    assert math.isnan(fmean([]))


def test_summarize_excludes_failures_from_means():
    rs = [_result(True, 0.1, t=2.0), _result(False, 1.0, failed=True, t=100.0), _result(True, 0.3, t=4.0)]
    st = summarize(rs, "sbl_gamp")
    assert st.trials == 3 and st.failures == 1
    assert st.mean_time_s == 3.0 and st.mean_nmse == pytest.approx(0.2)
    assert st.success_rate == pytest.approx(2 / 3)
    assert st.mean_nmse_db == pytest.approx(10 * math.log10(0.2))


def test_run_trial_scores_and_is_deterministic():
    spec = TrialSpec(50, 25, 3, seed=4)
    a, b = run_trial(spec, "sbl_gamp"), run_trial(spec, "sbl_gamp")
    assert a.success and a.nmse <= 1e-6 and a.wall_time_s > 0
    assert replace(a, wall_time_s=0) == replace(b, wall_time_s=0)


def test_run_trial_rejects_zero_signal():
    with pytest.raises(DomainError):
        run_trial(TrialSpec(20, 10, 0, seed=1), "sbl_em")


def test_run_trial_records_breakdown(monkeypatch):
    from sblgamp import bench
    from sblgamp.model import NumericalError

    def broken(*args):
        raise NumericalError("boom")

    monkeypatch.setitem(bench.SOLVERS, "sbl_em", broken)
    r = bench.run_trial(TrialSpec(20, 10, 2, seed=1), "sbl_em")
    assert r.failed and not r.success and not r.converged and r.nmse == 1.0


def test_parallel_matches_serial():
    cfg = SweepConfig.defaults("phase")
    specs = [TrialSpec(40, 20, 3, seed=s) for s in range(4)]
    serial = run_trials(specs, "sbl_gamp", cfg, workers=1)
    parallel = run_trials(specs, "sbl_gamp", cfg, workers=2)
    assert [replace(r, wall_time_s=0) for r in serial] == [replace(r, wall_time_s=0) for r in parallel]


def test_runtime_dims():
    assert runtime_dims(100) == (40, 12)
    assert runtime_dims(800) == (320, 96)


@pytest.mark.parametrize("change, fragment", [
    (dict(trials=0), "trials"),
    (dict(m_over_n=()), "empty"),
    (dict(m_over_n=(0.0,)), "fewer than one"),
    (dict(snr_db=20.0), "noiseless"),
    (dict(solvers=("lasso",)), "unknown solver"),
    (dict(solvers=()), "at least one"),
    (dict(threshold=0.0), "threshold"),
    (dict(workers=0), "workers"),
])
def test_phase_config_problems(change, fragment):
    cfg = replace(SweepConfig.defaults("phase"), **change)
    assert any(fragment in p for p in cfg.problems())
    with pytest.raises(DomainError):
        cfg.validate()


def test_runtime_config_problems():
    cfg = replace(SweepConfig.defaults("runtime"), n_list=(400, 100), k_ratio=0.001)
    probs = cfg.problems()
    assert any("ascending" in p for p in probs)
    assert any("degenerate" in p for p in probs)


def test_nmse_config_rejects_zero_k():
    assert any("k must" in p for p in replace(SweepConfig.defaults("nmse"), k=0).problems())


def test_defaults_are_valid():
    for kind in ("phase", "runtime", "nmse"):
        assert SweepConfig.defaults(kind).problems() == []
    with pytest.raises(DomainError):
        SweepConfig.defaults("lasso")


def _small_phase(**kw):
    base = dict(kind="phase", n=40, m_over_n=(0.5,), trials=6, solvers=("sbl_gamp",),
                em=EmOptions(max_em_iters=60))
    base.update(kw)
    return SweepConfig(**base)


def test_phase_contour_brackets_and_is_deterministic():
    cfg = _small_phase()
    row = phase_contour(cfg, "sbl_gamp", 20)
    assert row.bracketed and 0 < row.k_over_m_half < 1
    assert row.trials == row.probes * cfg.trials
    assert phase_contour(cfg, "sbl_gamp", 20) == row


def test_phase_contour_unbracketed_low(monkeypatch):
    from sblgamp import bench
    monkeypatch.setattr(bench, "success_rate", lambda rs: 0.0)
    row = bench.phase_contour(_small_phase(trials=1), "sbl_gamp", 20)
    assert (row.k_over_m_half, row.bracketed, row.probes) == (0.0, False, 1)


def test_phase_contour_unbracketed_high(monkeypatch):
    from sblgamp import bench
    monkeypatch.setattr(bench, "success_rate", lambda rs: 1.0)
    row = bench.phase_contour(_small_phase(trials=1), "sbl_gamp", 20)
    assert (row.k_over_m_half, row.bracketed, row.probes) == (1.0, False, 2)


def test_phase_transition_checks_kind():
    with pytest.raises(DomainError):
        phase_transition(SweepConfig.defaults("runtime"))


def test_success_rate_monotone_in_k():
    # binomial tolerance 3 sqrt(p(1-p)/T) between neighbouring sparsities
    cfg = _small_phase(trials=20)
    from sblgamp.bench import _phase_specs
    rates = [success_rate(run_trials(_phase_specs(cfg, 20, k), "sbl_gamp", cfg)) for k in (2, 6, 10, 14)]
    for a, b in zip(rates, rates[1:]):
        tol = 3 * math.sqrt(max(a * (1 - a), 0.25 / cfg.trials) / cfg.trials)
        assert b <= a + tol


def test_runtime_sweep_small():
    cfg = SweepConfig(kind="runtime", n_list=(40, 80), trials=2, em=EmOptions(max_em_iters=20))
    rows = runtime_sweep(cfg)
    assert [(r.n, r.m, r.k) for r in rows] == [(40, 16, 5), (80, 32, 10)]
    for r in rows:
        assert set(r.stats) == {"sbl_gamp", "sbl_em"}
        assert all(s.mean_time_s > 0 and s.trials == 2 for s in r.stats.values())


def test_nmse_sweep_small_is_deterministic():
    cfg = SweepConfig(kind="nmse", n=60, k=5, m_over_n=(0.4, 0.6), snr_db=20.0, trials=3,
                      em=EmOptions(max_em_iters=40))
    rows = nmse_sweep(cfg)
    assert [r.m for r in rows] == [24, 36]
    for r in rows:
        for s in r.stats.values():
            assert 0 < s.mean_nmse < 1 and s.failures == 0
    again = nmse_sweep(cfg)
    assert [r.stats["sbl_em"].mean_nmse for r in rows] == [r.stats["sbl_em"].mean_nmse for r in again]


def test_one_sparse_signals_always_recovered():
    cfg = SweepConfig(kind="phase", n=200, trials=10, master_seed=3)
    from sblgamp.bench import _phase_specs
    for solver in ("sbl_gamp", "sbl_em"):
        assert success_rate(run_trials(_phase_specs(cfg, 20, 1), solver, cfg)) == 1.0


@pytest.mark.slow
def test_nmse_non_increasing_in_measurements_and_baseline():
    # paired seeds across M/N; tolerance 3 standard errors of the paired difference
    n, k, trials = 500, 40, 10
    cfg = SweepConfig(kind="nmse", n=n, k=k, snr_db=20.0, trials=trials, solvers=("sbl_gamp",))
    cells = []
    for ratio in (0.3, 0.6, 0.9):
        m = round(ratio * n)
        specs = [TrialSpec(n, m, k, 20.0, seed=derive_seed(5, j)) for j in range(trials)]
        cells.append(np.array([r.nmse for r in run_trials(specs, "sbl_gamp", cfg)]))
    for lo, hi in zip(cells, cells[1:]):
        d = hi - lo
        assert d.mean() <= 3 * d.std(ddof=1) / np.sqrt(trials)
    assert cells[-1].mean() <= 10 ** -1.5


@pytest.mark.slow
def test_phase_contours_of_both_solvers_agree():
    cfg = SweepConfig(kind="phase", n=100, m_over_n=(0.2, 0.3, 0.4), trials=20, master_seed=9)
    rows = phase_transition(cfg)
    by = {(r.solver, r.m_over_n): r for r in rows}
    for ratio in cfg.m_over_n:
        g, e = by["sbl_gamp", ratio], by["sbl_em", ratio]
        assert g.bracketed and e.bracketed
        assert abs(g.k_over_m_half - e.k_over_m_half) <= 0.05
