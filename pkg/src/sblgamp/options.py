"""Iteration controls for the GAMP inner loop and the EM outer loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import GAMMA_MAX, DomainError


@dataclass(frozen=True)
class GampOptions:
    """Stopping and damping controls for one GAMP run.

    ``epsilon`` bounds the squared change of the posterior means between
    sweeps; ``None`` means ``1e-12 * N``. ``damping=1`` is the plain
    iteration, smaller values blend each new iterate with the previous one.
    """

    epsilon: float | None = None
    max_iters: int = 200
    damping: float = 1.0

    def __post_init__(self):
        problems = []
        if self.epsilon is not None and not self.epsilon > 0:
            problems.append(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iters < 1:
            problems.append(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0 < self.damping <= 1:
            problems.append(f"damping must lie in (0, 1], got {self.damping}")
        if problems:
            raise DomainError("; ".join(problems))

    def tolerance(self, n: int) -> float:
        return self.epsilon if self.epsilon is not None else 1e-12 * n


@dataclass(frozen=True)
class EmOptions:
    """Outer-loop settings shared by both SBL solvers.

    ``max_em_iters=None`` picks the solver's own default (200 for SBL-GAMP,
    500 for SBL-EM). ``gamma0=None`` selects the unit-SNR start ``M / ||y||^2``.
    """

    tol_outer: float = 1e-10
    max_em_iters: int | None = None
    alpha0: float = 1.0
    gamma0: float | None = None
    eps0: float = 1e-30
    warm_start: bool = False
    gamp: GampOptions = field(default_factory=GampOptions)

    def __post_init__(self):
        problems = []
        if not self.tol_outer > 0:
            problems.append(f"tol_outer must be > 0, got {self.tol_outer}")
        if self.max_em_iters is not None and self.max_em_iters < 1:
            problems.append(f"max_em_iters must be >= 1, got {self.max_em_iters}")
        if not self.alpha0 > 0:
            problems.append(f"alpha0 must be > 0, got {self.alpha0}")
        if self.gamma0 is not None and not self.gamma0 > 0:
            problems.append(f"gamma0 must be > 0, got {self.gamma0}")
        if not self.eps0 > 0:
            problems.append(f"eps0 must be > 0, got {self.eps0}")
        if problems:
            raise DomainError("; ".join(problems))

    def initial_gamma(self, y: np.ndarray) -> float:
        if self.gamma0 is not None:
            return min(float(self.gamma0), GAMMA_MAX)
        energy = float(y @ y)
        if energy == 0:
            return 1.0
        return min(y.shape[0] / energy, GAMMA_MAX)

    def relative_change(self, new: np.ndarray, old: np.ndarray) -> float:
        diff = new - old
        return float(diff @ diff) / max(float(old @ old), self.eps0)
