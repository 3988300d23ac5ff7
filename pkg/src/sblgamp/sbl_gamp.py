"""SBL-GAMP: EM hyperparameter learning with a GAMP-approximated E-step.

Per EM iteration one GAMP run supplies Gaussian approximations of the
posteriors of ``x`` and ``z = A x``; their second moments drive the
closed-form alpha and gamma updates. No matrix is ever inverted, so an
iteration costs ``O(MN)`` per GAMP sweep.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .gamp import INIT_VAR_CAP, GampDivergence, g_in, g_in_var, gamp_run
from .model import (Hyperparams, PriorConfig, ProblemInstance, RecoveryResult,
                    canonical_column_order, nmse)
from .options import EmOptions
from .sbl_em import _gamma_from_residual, m_step_alpha

DEFAULT_MAX_EM_ITERS = 200


def moment_x2(r_hat, tau_r, alpha):
    """Second moment ``<x^2>`` under the GAMP approximate posterior of ``x``."""
    return g_in(r_hat, tau_r, alpha) ** 2 + g_in_var(tau_r, alpha)


def update_alpha(x2, prior: PriorConfig):
    return m_step_alpha(np.asarray(x2, dtype=np.float64), prior)


def residual_moment(y, mu_z, phi_z):
    """``<(y - z)^2> = (y - mu_z)^2 + phi_z``."""
    if np.any(np.asarray(phi_z) <= 0):
        raise ValueError("phi_z must be strictly positive")
    return (y - mu_z) ** 2 + phi_z


def update_gamma(residual_moments, prior: PriorConfig) -> float:
    """``(M + 2c - 2) / (2d + sum_m <(y_m - z_m)^2>)``, clamped to ``GAMMA_MAX``."""
    residual_moments = np.asarray(residual_moments, dtype=np.float64)
    return _gamma_from_residual(residual_moments.shape[0], float(np.sum(residual_moments)), prior)


def sbl_gamp_solve(instance: ProblemInstance, prior: PriorConfig | None = None,
                   opts: EmOptions | None = None, callback=None) -> RecoveryResult:
    """Recover a sparse signal with SBL-GAMP.

    Each EM step runs GAMP at the current ``(alpha, gamma)`` (from the prior
    moments, or from the previous estimate when ``opts.warm_start``), then
    updates alpha from ``<x_n^2>`` and gamma from ``<(y_m - z_m)^2>``, both
    evaluated at the pre-update hyperparameters.

    A diverging GAMP run is repeated once at half the damping, and later
    EM steps keep the reduced damping. If the retry also diverges the solve
    stops and reports ``failed=True`` with the last finite estimate.
    ``callback(t, alpha, gamma)`` is invoked after every M-step.
    """
    prior = prior or PriorConfig()
    opts = opts or EmOptions()
    max_iters = opts.max_em_iters or DEFAULT_MAX_EM_ITERS

    perm = canonical_column_order(instance.A)
    A = np.ascontiguousarray(instance.A[:, perm])
    y = instance.y
    n = A.shape[1]
    work = ProblemInstance(A, y)
    A_sq = A * A
    inverse_perm = np.argsort(perm)

    gopts = opts.gamp
    alpha = np.full(n, float(opts.alpha0))
    gamma = opts.initial_gamma(y)
    mu = np.zeros(n)
    phi = np.minimum(1.0 / alpha, INIT_VAR_CAP)
    gammas = []
    inner_total = 0
    retries = 0
    converged = failed = False
    t = 0
    for t in range(1, max_iters + 1):
        hyper = Hyperparams(alpha, gamma)
        start = (mu, phi) if opts.warm_start and t > 1 else (None, None)
        try:
            out = gamp_run(work, hyper, gopts, mu0=start[0], phi0=start[1], A_sq=A_sq)
        except GampDivergence as exc:
            inner_total += exc.iteration + 1
            retries += 1
            gopts = replace(gopts, damping=gopts.damping / 2)
            try:
                out = gamp_run(work, hyper, gopts, mu0=start[0], phi0=start[1], A_sq=A_sq)
            except GampDivergence as exc2:
                inner_total += exc2.iteration + 1
                failed = True
                t -= 1
                break
        inner_total += out.iters

        x2 = moment_x2(out.r_hat, out.tau_r, alpha)
        alpha = update_alpha(x2, prior)
        gamma = update_gamma(residual_moment(y, out.mu_z, out.phi_z), prior)
        gammas.append(gamma)
        if callback is not None:
            callback(t, alpha[inverse_perm], gamma)

        change = opts.relative_change(out.mu_x, mu)
        mu, phi = out.mu_x, out.phi_x
        if change <= opts.tol_outer:
            converged = True
            break

    x_hat = mu[inverse_perm]
    return RecoveryResult(
        x_hat=x_hat, x_var=phi[inverse_perm],
        hyper=Hyperparams(alpha[inverse_perm], gamma), em_iters=t,
        inner_iters_total=inner_total, converged=converged,
        nmse=None if instance.truth is None else nmse(x_hat, instance.truth),
        retries=retries, failed=failed, gamma_trace=tuple(gammas),
    )
