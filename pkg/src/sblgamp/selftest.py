"""Fast invariant checks run by ``sblgamp selftest``.

Every check is deterministic, so two runs print identical reports.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import gamp
from .model import Hyperparams, PriorConfig, ProblemInstance
from .options import EmOptions
from .sbl_em import e_step_exact, m_step_alpha, sbl_em_solve
from .sbl_gamp import moment_x2, sbl_gamp_solve, update_alpha
from .synth import TrialSpec, gen_matrix, make_instance


def check_scalar_examples():
    assert gamp.g_in(2.0, 1.0, 1.0) == 1.0
    assert gamp.g_in(3.0, 0.5, 0.0) == 3.0
    assert gamp.g_in_var(1.0, 1.0) == 0.5
    assert gamp.g_in_var(2.0, 3.0) == 2.0 / 7.0
    assert gamp.z_posterior(2.0, 0.5, 2.0, 3.0) == (2.5, 0.25)
    assert gamp.g_out(2.0, 0.5, 2.0, 3.0) == 1.0
    assert gamp.g_out(0.0, 1.0, 1.0, 1.0) == 0.5
    assert gamp.g_out_neg_deriv(0.5, 2.0) == 1.0
    assert moment_x2(2.0, 1.0, 1.0) == 1.5


def check_output_function_identity():
    # exact rational evaluation of (mu_z - p) / tau_p against the float g_out
    rng = np.random.default_rng(7)
    for _ in range(200):
        p, y = rng.normal(size=2) * 10
        tau_p, gamma = np.exp(rng.uniform(-5, 5, size=2))
        fp, ft, fg, fy = map(Fraction, (p, tau_p, gamma, y))
        mu_z = (ft * fg * fy + fp) / (1 + fg * ft)
        exact = float((mu_z - fp) / ft)
        got = gamp.g_out(p, tau_p, gamma, y)
        assert abs(got - exact) <= 1e-14 * abs(exact), (p, tau_p, gamma, y)
        phi_z = ft / (1 + fg * ft)
        assert abs(gamp.g_out_neg_deriv(tau_p, gamma) - float((ft - phi_z) / ft**2)) <= 1e-14 * gamma


def check_gaussian_fixed_point():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        A = gen_matrix(50, 100, rng)
        y = rng.standard_normal(50)
        hyper = Hyperparams.uniform(100, 1.0, 100.0)
        out = gamp.gamp_run(ProblemInstance(A, y), hyper)
        rhs = hyper.gamma * (A.T @ y)
        lhs = hyper.gamma * (A.T @ (A @ out.mu_x)) + hyper.alpha * out.mu_x
        rel = np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)
        assert out.converged and rel <= 1e-5, f"seed {seed}: relative residual {rel:.3e}"


def check_exact_posterior():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((30, 60))
    y = rng.standard_normal(30)
    hyper = Hyperparams(rng.uniform(0.5, 2.0, 60), 4.0)
    post = e_step_exact(ProblemInstance(A, y), hyper)
    rhs = hyper.gamma * (A.T @ y)
    lhs = hyper.gamma * (A.T @ (A @ post.mu)) + hyper.alpha * post.mu
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)
    Phi = post.Phi
    assert np.max(np.abs(Phi - Phi.T)) <= 1e-12 * np.max(np.abs(Phi))


def check_formula_sharing():
    rng = np.random.default_rng(11)
    prior = PriorConfig(a=1.3, b=0.01)
    x2 = rng.exponential(size=50)
    assert np.array_equal(update_alpha(x2, prior), m_step_alpha(x2, prior))
    r, tau, alpha = rng.normal(size=50), rng.exponential(size=50), rng.exponential(size=50)
    assert np.array_equal(moment_x2(r, tau, alpha), gamp.g_in(r, tau, alpha) ** 2 + gamp.g_in_var(tau, alpha))


def _solver_symmetry(solve, opts):
    inst = make_instance(TrialSpec(60, 30, 4, 30.0, seed=5))
    flipped = ProblemInstance(inst.A, -inst.y)
    a, b = solve(inst, None, opts), solve(flipped, None, opts)
    assert np.array_equal(a.x_hat, -b.x_hat)
    assert np.array_equal(a.x_var, b.x_var)
    assert np.array_equal(a.hyper.alpha, b.hyper.alpha) and a.gamma_trace == b.gamma_trace

    perm = np.random.default_rng(1).permutation(inst.n)
    shuffled = ProblemInstance(inst.A[:, perm], inst.y)
    c = solve(shuffled, None, opts)
    assert np.array_equal(c.x_hat, a.x_hat[perm])
    assert np.array_equal(c.hyper.alpha, a.hyper.alpha[perm]) and c.gamma_trace == a.gamma_trace


def check_sbl_gamp_symmetry():
    _solver_symmetry(sbl_gamp_solve, EmOptions(max_em_iters=30))


def check_sbl_em_symmetry():
    _solver_symmetry(sbl_em_solve, EmOptions(max_em_iters=30))


CHECKS = [
    ("scalar function examples", check_scalar_examples),
    ("output function identity (exact rational oracle)", check_output_function_identity),
    ("GAMP Gaussian fixed point, M=50 N=100", check_gaussian_fixed_point),
    ("exact posterior residual and symmetry", check_exact_posterior),
    ("shared alpha update and x2 moment", check_formula_sharing),
    ("SBL-GAMP odd symmetry and permutation equivariance", check_sbl_gamp_symmetry),
    ("SBL-EM odd symmetry and permutation equivariance", check_sbl_em_symmetry),
]


def run_selftest(out=print) -> bool:
    """Run every check, report one line each, and return True iff all pass."""
    passed = 0
    for name, check in CHECKS:
        try:
            with np.errstate(all="ignore"):
                check()
        except Exception as exc:  # noqa: BLE001 - a failed check is a reported result
            detail = str(exc) or type(exc).__name__
            out(f"FAIL  {name}: {detail}")
        else:
            passed += 1
            out(f"PASS  {name}")
    out(f"{passed}/{len(CHECKS)} checks passed")
    return passed == len(CHECKS)
