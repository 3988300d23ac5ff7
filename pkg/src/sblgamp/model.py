"""Core value types shared by the solvers, and the recovery metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ALPHA_MIN = 1e-12
ALPHA_MAX = 1e12
GAMMA_MAX = 1e12


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class NumericalError(ArithmeticError):
    """A computation broke down numerically (failed factorization, overflow)."""


def _frozen_array(values, name, ndim):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemInstance:
    """Linear measurement model ``y = A x + w``.

    ``truth`` is the generating signal when known and ``noise_var`` the
    variance of ``w`` (absent for noiseless data).
    """

    A: np.ndarray
    y: np.ndarray
    truth: np.ndarray | None = None
    noise_var: float | None = None

    def __post_init__(self):
        A = _frozen_array(self.A, "A", 2)
        y = _frozen_array(self.y, "y", 1)
        m, n = A.shape
        if m < 1 or n < 1:
            raise DomainError(f"A must have at least one row and column, got {A.shape}")
        if y.shape[0] != m:
            raise DomainError(f"y has length {y.shape[0]} but A has {m} rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        if self.truth is not None:
            truth = _frozen_array(self.truth, "truth", 1)
            if truth.shape[0] != n:
                raise DomainError(f"truth has length {truth.shape[0]} but A has {n} columns")
            object.__setattr__(self, "truth", truth)
        if self.noise_var is not None:
            if not np.isfinite(self.noise_var) or self.noise_var < 0:
                raise DomainError(f"noise_var must be finite and >= 0, got {self.noise_var}")
            object.__setattr__(self, "noise_var", float(self.noise_var))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class PriorConfig:
    """Gamma hyperprior parameters: ``(a, b)`` for each alpha, ``(c, d)`` for gamma.

    The defaults are nearly uninformative; ``a = 1`` turns the alpha update
    into the classical ``1 / <x_n^2>`` rule.
    """

    a: float = 1.0
    b: float = 1e-10
    c: float = 1.0
    d: float = 1e-10

    def __post_init__(self):
        problems = []
        if not self.a > 0.5:
            problems.append(f"a must exceed 0.5, got {self.a}")
        if not self.b >= 0:
            problems.append(f"b must be >= 0, got {self.b}")
        if not self.c >= 1:
            problems.append(f"c must be >= 1, got {self.c}")
        if not self.d >= 0:
            problems.append(f"d must be >= 0, got {self.d}")
        if problems:
            raise DomainError("; ".join(problems))


@dataclass(frozen=True)
class Hyperparams:
    """Coefficient precisions ``alpha`` (one per column) and noise precision ``gamma``."""

    alpha: np.ndarray
    gamma: float

    def __post_init__(self):
        alpha = _frozen_array(self.alpha, "alpha", 1)
        if np.any(alpha <= 0):
            raise DomainError("alpha entries must be strictly positive")
        gamma = float(self.gamma)
        if not (np.isfinite(gamma) and gamma > 0):
            raise DomainError(f"gamma must be finite and > 0, got {self.gamma}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def uniform(cls, n: int, alpha: float = 1.0, gamma: float = 1.0) -> Hyperparams:
        return cls(np.full(n, float(alpha)), gamma)


@dataclass(frozen=True)
class RecoveryResult:
    """Output of a sparse-recovery solve.

    ``nmse`` is filled in only when the instance carried ground truth.
    ``retries`` counts inner GAMP runs repeated with stronger damping and
    ``failed`` marks a solve abandoned after an unrecoverable divergence.
    """

    x_hat: np.ndarray
    x_var: np.ndarray
    hyper: Hyperparams
    em_iters: int
    inner_iters_total: int
    converged: bool
    nmse: float | None = None
    retries: int = 0
    failed: bool = False
    gamma_trace: tuple[float, ...] = field(default=(), repr=False)


def nmse(x_hat, truth) -> float:
    """Normalized squared error ``||truth - x_hat||^2 / ||truth||^2``."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if x_hat.shape != truth.shape:
        raise DomainError(f"shape mismatch: {x_hat.shape} vs {truth.shape}")
    scale = float(np.max(np.abs(truth), initial=0.0))
    if scale == 0:
        raise DomainError("nmse is undefined for an all-zero reference signal")
    # rescale so the squares neither underflow nor overflow
    truth = truth / scale
    err = truth - x_hat / scale
    with np.errstate(over="ignore"):
        # an estimate ~1e154 times larger than the truth has infinite NMSE
        return float(err @ err) / float(truth @ truth)


def is_success(x_hat, truth, threshold: float = 1e-6) -> bool:
    # inclusive: an error equal to the threshold still counts as recovered
    if not threshold > 0:
        raise DomainError(f"threshold must be > 0, got {threshold}")
    return nmse(x_hat, truth) <= threshold


def canonical_column_order(A: np.ndarray) -> np.ndarray:
    """Permutation sorting the columns of ``A`` lexicographically by content.

    The solvers work on columns in this order, so their floating-point
    reductions, and hence their results, do not depend on how the caller
    ordered the columns.
    """
    return np.lexsort(A[::-1])
