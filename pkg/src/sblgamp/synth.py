"""Seeded generation of random sparse-recovery problems.

Every trial is a pure function of its :class:`TrialSpec`. The signal,
matrix and noise draw from independent sub-streams of the trial seed, so
changing the SNR leaves ``A`` and ``x`` untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DomainError, ProblemInstance

NONZERO_DISTS = ("gaussian", "rademacher")


def derive_seed(master_seed: int, *keys: int) -> int:
    """Stable 64-bit seed for the trial identified by ``keys``, independent of run order."""
    words = np.random.SeedSequence([int(master_seed), *map(int, keys)]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


@dataclass(frozen=True)
class TrialSpec:
    """One random problem: dimensions, sparsity, noise level and seed.

    ``snr_db=None`` means noiseless measurements.
    """

    n: int
    m: int
    k: int
    snr_db: float | None = None
    nonzero_dist: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DomainError(f"n and m must be >= 1, got n={self.n}, m={self.m}")
        if not 0 <= self.k <= self.n:
            raise DomainError(f"k must lie in [0, n], got k={self.k}, n={self.n}")
        if self.nonzero_dist not in NONZERO_DISTS:
            raise DomainError(f"nonzero_dist must be one of {NONZERO_DISTS}, got {self.nonzero_dist!r}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def streams(self):
        """Independent generators for the signal, matrix and noise."""
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(3)]


def gen_signal(spec: TrialSpec, rng: np.random.Generator) -> np.ndarray:
    x = np.zeros(spec.n)
    support = rng.choice(spec.n, size=spec.k, replace=False)
    if spec.nonzero_dist == "gaussian":
        values = rng.standard_normal(spec.k)
    else:
        values = rng.choice(np.array([-1.0, 1.0]), size=spec.k)
    x[support] = values
    return x


def gen_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. standard normal ``m x n`` matrix with columns scaled to unit norm."""
    if m < 1 or n < 1:
        raise DomainError(f"m and n must be >= 1, got m={m}, n={n}")
    A = rng.standard_normal((m, n))
    norms = np.linalg.norm(A, axis=0)
    for j in np.flatnonzero(norms == 0):
        while norms[j] == 0:
            A[:, j] = rng.standard_normal(m)
            norms[j] = np.linalg.norm(A[:, j])
    return A / norms


def make_instance(spec: TrialSpec) -> ProblemInstance:
    signal_rng, matrix_rng, noise_rng = spec.streams()
    x = gen_signal(spec, signal_rng)
    A = gen_matrix(spec.m, spec.n, matrix_rng)
    z = A @ x
    if spec.snr_db is None:
        return ProblemInstance(A, z, truth=x)
    power = float(z @ z)
    if power == 0:
        raise DomainError("SNR is undefined for a zero noiseless signal")
    noise_var = power / (spec.m * 10.0 ** (spec.snr_db / 10.0))
    y = z + np.sqrt(noise_var) * noise_rng.standard_normal(spec.m)
    return ProblemInstance(A, y, truth=x, noise_var=noise_var)
