"""Generalized approximate message passing for a Gaussian prior and Gaussian noise.

With ``x_n ~ N(0, 1/alpha_n)`` and ``y_m | z_m ~ N(z_m, 1/gamma)`` both scalar
channels are Gaussian, so the input and output functions are closed-form
posterior moments. All scalar functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Hyperparams, NumericalError, ProblemInstance
from .options import GampOptions

# cap on the prior variance used to start a run (1/alpha explodes near ALPHA_MIN)
INIT_VAR_CAP = 1e6
TAU_R_FLOOR = 1e-300
TAU_R_CAP = 1e12
# squared mean-change growth over its running minimum that counts as divergence
GROWTH_LIMIT = 1e4


class GampDivergence(NumericalError):
    """GAMP produced non-finite or runaway iterates."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


def _require_positive(name, value):
    if np.any(np.asarray(value) <= 0):
        raise ValueError(f"{name} must be strictly positive")


def _g_in(r_hat, tau_r, alpha):
    return r_hat / (1.0 + alpha * tau_r)


def _g_in_var(tau_r, alpha):
    return tau_r / (1.0 + alpha * tau_r)


def _g_out(p_hat, tau_p, gamma, y):
    return gamma * (y - p_hat) / (1.0 + gamma * tau_p)


def _g_out_neg_deriv(tau_p, gamma):
    return gamma / (1.0 + gamma * tau_p)


def g_in(r_hat, tau_r, alpha):
    """Posterior mean of ``x`` given the pseudo-observation ``r_hat`` with variance ``tau_r``."""
    _require_positive("tau_r", tau_r)
    return _g_in(r_hat, tau_r, alpha)


def g_in_var(tau_r, alpha):
    """Posterior variance of ``x``; equals ``tau_r * d g_in / d r_hat``."""
    _require_positive("tau_r", tau_r)
    return _g_in_var(tau_r, alpha)


def z_posterior(p_hat, tau_p, gamma, y):
    """Mean and variance of ``z`` combining the prior ``N(p_hat, tau_p)`` with ``y``.

    Returns
    -------
    mu_z, phi_z : precision-weighted mean of ``y`` and ``p_hat``, and the
        posterior variance ``tau_p / (1 + gamma tau_p)``.
    """
    _require_positive("tau_p", tau_p)
    _require_positive("gamma", gamma)
    denom = 1.0 + gamma * tau_p
    return (tau_p * gamma * y + p_hat) / denom, tau_p / denom


def g_out(p_hat, tau_p, gamma, y):
    """Scaled residual ``(mu_z - p_hat) / tau_p``.

    Evaluated as ``gamma (y - p_hat) / (1 + gamma tau_p)``, which avoids the
    cancellation in ``mu_z - p_hat`` when ``gamma tau_p`` is small.
    """
    _require_positive("tau_p", tau_p)
    _require_positive("gamma", gamma)
    return _g_out(p_hat, tau_p, gamma, y)


def g_out_neg_deriv(tau_p, gamma):
    """``-d g_out / d p_hat = gamma / (1 + gamma tau_p)``."""
    _require_positive("tau_p", tau_p)
    _require_positive("gamma", gamma)
    return _g_out_neg_deriv(tau_p, gamma)


@dataclass
class GampState:
    """Message quantities after one completed sweep.

    ``mu_x``/``phi_x`` already hold the updated (iteration ``k + 1``) means
    and variances; every other field belongs to iteration ``k``.
    ``change`` is the squared distance between consecutive means.
    """

    k: int
    mu_x: np.ndarray
    phi_x: np.ndarray
    z_hat: np.ndarray
    tau_p: np.ndarray
    p_hat: np.ndarray
    s_hat: np.ndarray
    tau_s: np.ndarray
    tau_r: np.ndarray
    r_hat: np.ndarray
    change: float


@dataclass(frozen=True)
class GampOutput:
    mu_x: np.ndarray
    phi_x: np.ndarray
    r_hat: np.ndarray
    tau_r: np.ndarray
    p_hat: np.ndarray
    tau_p: np.ndarray
    mu_z: np.ndarray
    phi_z: np.ndarray
    iters: int
    converged: bool


def iterate_gamp(A, y, alpha, gamma, opts=None, mu0=None, phi0=None, A_sq=None):
    """Yield a :class:`GampState` for every GAMP sweep until ``opts.max_iters``.

    The caller decides when to stop; :func:`gamp_run` applies the standard
    squared-change rule. ``mu0``/``phi0`` override the prior-moment start and
    ``A_sq`` may carry a precomputed ``A * A``.

    Raises :class:`GampDivergence` on non-finite iterates or when the squared
    mean-change grows far beyond its running minimum.
    """
    opts = opts or GampOptions()
    m, n = A.shape
    if A_sq is None:
        A_sq = A * A
    damping = opts.damping
    eps = opts.tolerance(n)

    mu = np.zeros(n) if mu0 is None else np.array(mu0, dtype=np.float64)
    if phi0 is None:
        phi = np.minimum(1.0 / alpha, INIT_VAR_CAP)
    else:
        phi = np.array(phi0, dtype=np.float64)
    s_hat = np.zeros(m)
    smallest = np.inf

    for k in range(opts.max_iters):
        # output side
        z_hat = A @ mu
        tau_p = A_sq @ phi
        p_hat = z_hat - tau_p * s_hat
        s_new = _g_out(p_hat, tau_p, gamma, y)
        tau_s = _g_out_neg_deriv(tau_p, gamma)
        s_hat = s_new if damping == 1.0 else damping * s_new + (1.0 - damping) * s_hat

        # input side
        tau_r = 1.0 / np.maximum(A_sq.T @ tau_s, TAU_R_FLOOR)
        np.minimum(tau_r, TAU_R_CAP, out=tau_r)
        r_hat = mu + tau_r * (A.T @ s_hat)
        mu_new = _g_in(r_hat, tau_r, alpha)
        if damping != 1.0:
            mu_new = damping * mu_new + (1.0 - damping) * mu
        phi = _g_in_var(tau_r, alpha)

        diff = mu_new - mu
        change = float(diff @ diff)
        if not (np.isfinite(change) and np.all(np.isfinite(r_hat)) and np.all(np.isfinite(p_hat))):
            raise GampDivergence("non-finite GAMP iterate", k)
        if k > 0:
            if change > eps and change > GROWTH_LIMIT * smallest:
                raise GampDivergence("GAMP mean updates are growing without bound", k)
            smallest = min(smallest, change)
        mu = mu_new
        yield GampState(k, mu, phi, z_hat, tau_p, p_hat, s_hat, tau_s, tau_r, r_hat, change)


def gamp_run(instance: ProblemInstance, hyper: Hyperparams, opts: GampOptions | None = None,
             mu0=None, phi0=None, A_sq=None) -> GampOutput:
    """Run GAMP with fixed hyperparameters until the means stop moving.

    Stops at the first sweep whose squared mean-change is at most
    ``opts.tolerance(N)``, or after ``opts.max_iters`` sweeps (``converged``
    is then False). The output carries the last-sweep ``r_hat, tau_r,
    p_hat, tau_p``, the updated means/variances, and the posterior moments
    of ``z = A x`` evaluated at the same ``gamma``.
    """
    opts = opts or GampOptions()
    if hyper.alpha.shape[0] != instance.n:
        raise ValueError(f"alpha has length {hyper.alpha.shape[0]}, expected {instance.n}")
    eps = opts.tolerance(instance.n)
    state = None
    converged = False
    for state in iterate_gamp(instance.A, instance.y, hyper.alpha, hyper.gamma, opts,
                              mu0=mu0, phi0=phi0, A_sq=A_sq):
        if state.change <= eps:
            converged = True
            break
    mu_z, phi_z = z_posterior(state.p_hat, state.tau_p, hyper.gamma, instance.y)
    return GampOutput(
        mu_x=state.mu_x, phi_x=state.phi_x, r_hat=state.r_hat, tau_r=state.tau_r,
        p_hat=state.p_hat, tau_p=state.tau_p, mu_z=mu_z, phi_z=phi_z,
        iters=state.k + 1, converged=converged,
    )
