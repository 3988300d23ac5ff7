"""Monte-Carlo harness: success rates, phase-transition contours, runtime and NMSE sweeps.

Trials are pure functions of their :class:`~sblgamp.synth.TrialSpec`, whose
seed is derived from the master seed and the trial's coordinates. Both
solvers of a comparison therefore see identical instances, and results do
not depend on execution order. Means use :func:`math.fsum` so aggregation
is exactly order independent.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError, NumericalError, PriorConfig, is_success, nmse
from .options import EmOptions
from .sbl_em import sbl_em_solve
from .sbl_gamp import sbl_gamp_solve
from .synth import NONZERO_DISTS, TrialSpec, derive_seed, make_instance

SOLVERS = {"sbl_gamp": sbl_gamp_solve, "sbl_em": sbl_em_solve}
KINDS = ("phase", "runtime", "nmse")


@dataclass(frozen=True)
class TrialResult:
    spec: TrialSpec
    solver: str
    nmse: float
    success: bool
    wall_time_s: float
    em_iters: int
    inner_iters_total: int
    converged: bool
    retried: bool
    failed: bool = False


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of one experiment sweep.

    ``kind`` selects which fields matter: ``phase`` uses ``n`` and the
    ``m_over_n`` grid; ``runtime`` uses ``n_list`` with ``M = m_ratio * N``
    and ``K = k_ratio * M``; ``nmse`` uses ``n``, ``k`` and the ``m_over_n``
    list. ``snr_db=None`` means noiseless.
    """

    kind: str = "phase"
    solvers: tuple[str, ...] = ("sbl_gamp", "sbl_em")
    n: int = 200
    m_over_n: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    n_list: tuple[int, ...] = (100, 200, 400, 800)
    k: int = 40
    m_ratio: float = 0.4
    k_ratio: float = 0.3
    trials: int = 50
    threshold: float = 1e-6
    master_seed: int = 0
    snr_db: float | None = None
    nonzero_dist: str = "gaussian"
    workers: int = 1
    prior: PriorConfig = field(default_factory=PriorConfig)
    em: EmOptions = field(default_factory=EmOptions)

    @classmethod
    def defaults(cls, kind: str) -> SweepConfig:
        """Desk-scale defaults for each sweep kind."""
        if kind == "phase":
            return cls(kind="phase")
        if kind == "runtime":
            return cls(kind="runtime", trials=10)
        if kind == "nmse":
            return cls(kind="nmse", n=500, k=40, snr_db=20.0, trials=100,
                       m_over_n=(0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9))
        raise DomainError(f"unknown sweep kind {kind!r}")

    def problems(self) -> list[str]:
        """Every violated constraint, empty when the configuration is usable."""
        out = []
        if self.kind not in KINDS:
            out.append(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.solvers:
            out.append("at least one solver is required")
        for s in self.solvers:
            if s not in SOLVERS:
                out.append(f"unknown solver {s!r} (choose from {sorted(SOLVERS)})")
        if len(set(self.solvers)) != len(self.solvers):
            out.append("solvers must not repeat")
        if self.trials < 1:
            out.append(f"trials must be >= 1, got {self.trials}")
        if not self.threshold > 0:
            out.append(f"threshold must be > 0, got {self.threshold}")
        if not 0 <= self.master_seed < 2**64:
            out.append(f"seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.workers < 1:
            out.append(f"workers must be >= 1, got {self.workers}")
        if self.nonzero_dist not in NONZERO_DISTS:
            out.append(f"nonzero_dist must be one of {NONZERO_DISTS}, got {self.nonzero_dist!r}")

        if self.kind in ("phase", "nmse"):
            if self.n < 1:
                out.append(f"n must be >= 1, got {self.n}")
            if not self.m_over_n:
                out.append("m_over_n grid is empty")
            for r in self.m_over_n:
                if r <= 0 or (self.n >= 1 and round(r * self.n) < 1):
                    out.append(f"m_over_n={r} gives fewer than one measurement")
        if self.kind == "phase" and self.snr_db is not None:
            out.append("phase transitions require noiseless trials (snr_db = noiseless)")
        if self.kind == "nmse":
            if not 1 <= self.k <= self.n:
                out.append(f"k must lie in [1, n], got k={self.k}")
        if self.kind == "runtime":
            if not self.n_list:
                out.append("n_list is empty")
            if list(self.n_list) != sorted(self.n_list):
                out.append("n_list must be sorted ascending")
            if not 0 < self.m_ratio:
                out.append(f"m_ratio must be > 0, got {self.m_ratio}")
            if not 0 < self.k_ratio <= 1:
                out.append(f"k_ratio must lie in (0, 1], got {self.k_ratio}")
            for n in self.n_list:
                m, k = runtime_dims(n, self.m_ratio, self.k_ratio)
                if n < 1 or m < 1 or k < 1 or k > n:
                    out.append(f"N={n} gives an empty or degenerate cell (M={m}, K={k})")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise DomainError("invalid sweep configuration:\n  " + "\n  ".join(problems))


def runtime_dims(n: int, m_ratio: float = 0.4, k_ratio: float = 0.3) -> tuple[int, int]:
    m = int(round(m_ratio * n))
    return m, int(round(k_ratio * m))


def run_trial(spec: TrialSpec, solver: str, threshold: float = 1e-6,
              prior: PriorConfig | None = None, opts: EmOptions | None = None) -> TrialResult:
    """Generate one instance, time the solve, and score it.

    Raises :class:`DomainError` for a zero ground-truth signal; solver
    breakdowns are recorded as failed trials instead of raising.
    """
    solve = SOLVERS[solver]
    inst = make_instance(spec)
    if not np.any(inst.truth):
        raise DomainError("trial has an all-zero signal; NMSE is undefined")
    start = time.perf_counter()
    try:
        res = solve(inst, prior, opts)
    except NumericalError:
        elapsed = time.perf_counter() - start
        return TrialResult(spec, solver, 1.0, False, elapsed, 0, 0, False, False, failed=True)
    elapsed = time.perf_counter() - start
    err = nmse(res.x_hat, inst.truth)
    return TrialResult(
        spec, solver, err, (not res.failed) and is_success(res.x_hat, inst.truth, threshold),
        elapsed, res.em_iters, res.inner_iters_total, res.converged, res.retries > 0,
        failed=res.failed,
    )


def success_rate(results) -> float:
    results = list(results)
    if not results:
        raise DomainError("success rate of an empty collection")
    return sum(r.success for r in results) / len(results)


def _run_task(task):
    return run_trial(*task)


def run_trials(specs, solver, cfg: SweepConfig, workers: int | None = None) -> list[TrialResult]:
    """Run ``solver`` on each spec, in parallel when ``workers > 1``. Order is preserved."""
    tasks = [(s, solver, cfg.threshold, cfg.prior, cfg.em) for s in specs]
    workers = cfg.workers if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_task, tasks))
    return [_run_task(t) for t in tasks]


def fmean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else math.nan


@dataclass(frozen=True)
class PhaseRow:
    solver: str
    m_over_n: float
    m: int
    k_over_m_half: float
    bracketed: bool
    probes: int
    trials: int


def _phase_specs(cfg, m, k):
    return [TrialSpec(cfg.n, m, k, None, cfg.nonzero_dist, derive_seed(cfg.master_seed, m, k, j))
            for j in range(cfg.trials)]


def phase_contour(cfg: SweepConfig, solver: str, m: int) -> PhaseRow:
    """Bisect on integer K for the 0.5 success-rate crossing at ``m`` measurements."""
    probes = 0
    cache = {}

    def rate(k):
        nonlocal probes
        if k not in cache:
            probes += 1
            cache[k] = success_rate(run_trials(_phase_specs(cfg, m, k), solver, cfg))
        return cache[k]

    ratio = m / cfg.n
    if rate(1) <= 0.5:
        return PhaseRow(solver, ratio, m, 0.0, False, probes, probes * cfg.trials)
    if m == 1 or rate(m) > 0.5:
        return PhaseRow(solver, ratio, m, 1.0, False, probes, probes * cfg.trials)
    lo, hi = 1, m
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rate(mid) > 0.5:
            lo = mid
        else:
            hi = mid
    return PhaseRow(solver, ratio, m, (lo + hi) / 2 / m, True, probes, probes * cfg.trials)


def phase_transition(cfg: SweepConfig) -> list[PhaseRow]:
    cfg.validate()
    if cfg.kind != "phase":
        raise DomainError("phase_transition needs a phase sweep configuration")
    rows = []
    for solver in cfg.solvers:
        for r in cfg.m_over_n:
            rows.append(phase_contour(cfg, solver, int(round(r * cfg.n))))
    return rows


@dataclass(frozen=True)
class CellStats:
    solver: str
    trials: int
    failures: int
    mean_time_s: float
    mean_nmse: float
    mean_em_iters: float
    success_rate: float

    @property
    def mean_nmse_db(self) -> float:
        return 10.0 * math.log10(self.mean_nmse) if self.mean_nmse > 0 else -math.inf


def summarize(results, solver) -> CellStats:
    """Aggregate one cell, excluding failed trials from the means but counting them."""
    results = list(results)
    ok = [r for r in results if not r.failed]
    return CellStats(
        solver=solver, trials=len(results), failures=len(results) - len(ok),
        mean_time_s=fmean(r.wall_time_s for r in ok),
        mean_nmse=fmean(r.nmse for r in ok),
        mean_em_iters=fmean(r.em_iters for r in ok),
        success_rate=success_rate(results),
    )


@dataclass(frozen=True)
class RuntimeRow:
    n: int
    m: int
    k: int
    stats: dict


def runtime_sweep(cfg: SweepConfig) -> list[RuntimeRow]:
    """Mean wall time per solver for each N, with ``M = m_ratio N`` and ``K = k_ratio M``.

    Trials always run in this process, one at a time, whatever ``cfg.workers`` says.
    """
    cfg.validate()
    if cfg.kind != "runtime":
        raise DomainError("runtime_sweep needs a runtime sweep configuration")
    rows = []
    for n in cfg.n_list:
        m, k = runtime_dims(n, cfg.m_ratio, cfg.k_ratio)
        specs = [TrialSpec(n, m, k, cfg.snr_db, cfg.nonzero_dist, derive_seed(cfg.master_seed, n, j))
                 for j in range(cfg.trials)]
        stats = {s: summarize(run_trials(specs, s, cfg, workers=1), s) for s in cfg.solvers}
        rows.append(RuntimeRow(n, m, k, stats))
    return rows


@dataclass(frozen=True)
class NmseRow:
    m_over_n: float
    n: int
    m: int
    k: int
    stats: dict


def nmse_sweep(cfg: SweepConfig) -> list[NmseRow]:
    """Mean NMSE per solver at each ``M/N`` for fixed ``N``, ``K`` and SNR.

    Trial ``j`` uses the same seed in every cell, so its signal is shared
    across ``M/N``.
    """
    cfg.validate()
    if cfg.kind != "nmse":
        raise DomainError("nmse_sweep needs an nmse sweep configuration")
    rows = []
    for r in cfg.m_over_n:
        m = int(round(r * cfg.n))
        specs = [TrialSpec(cfg.n, m, cfg.k, cfg.snr_db, cfg.nonzero_dist, derive_seed(cfg.master_seed, j))
                 for j in range(cfg.trials)]
        stats = {s: summarize(run_trials(specs, s, cfg), s) for s in cfg.solvers}
        rows.append(NmseRow(r, cfg.n, m, cfg.k, stats))
    return rows
