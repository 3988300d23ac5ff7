from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sblgamp import GampOptions, Hyperparams, ProblemInstance
from sblgamp.gamp import (GampDivergence, g_in, g_in_var, g_out, g_out_neg_deriv, gamp_run,
                          iterate_gamp, z_posterior)
from sblgamp.synth import gen_matrix

pos = st.floats(1e-6, 1e6)
real = st.floats(-1e6, 1e6)


# scalar channel functions: hand-computed values

def test_scalar_values():
    assert g_in(2.0, 1.0, 1.0) == 1.0
    assert g_in(3.0, 0.5, 0.0) == 3.0
    assert g_in_var(2.0, 3.0) == 2.0 / 7.0
    assert z_posterior(2.0, 0.5, 2.0, 3.0) == (2.5, 0.25)
    assert g_out(2.0, 0.5, 2.0, 3.0) == 1.0
    assert g_out_neg_deriv(0.5, 2.0) == 1.0


def test_scalar_functions_broadcast():
    r = np.array([1.0, -2.0, 4.0])
    np.testing.assert_array_equal(g_in(r, 1.0, np.array([0.0, 1.0, 3.0])), [1.0, -1.0, 1.0])


@pytest.mark.parametrize("call", [
    lambda: g_in(1.0, 0.0, 1.0),
    lambda: g_in_var(-1.0, 1.0),
    lambda: z_posterior(0.0, 0.0, 1.0, 1.0),
    lambda: g_out(0.0, 1.0, 0.0, 1.0),
    lambda: g_out_neg_deriv(1.0, -1.0),
])
def test_scalar_functions_reject_nonpositive_variances(call):
    with pytest.raises(ValueError):
        call()


@given(real, pos, pos)
def test_input_shrinks_toward_zero(r, tau, alpha):
    m = g_in(r, tau, alpha)
    assert abs(m) <= abs(r)
    assert m == 0 or np.sign(m) == np.sign(r)
    assert 0 < g_in_var(tau, alpha) <= tau


def _exact_z(p, tau_p, gamma, y):
    fp, ft, fg, fy = map(Fraction, (p, tau_p, gamma, y))
    mu_z = (ft * fg * fy + fp) / (1 + fg * ft)
    phi_z = ft / (1 + fg * ft)
    return fp, ft, mu_z, phi_z


@given(real, pos, pos, real)
def test_output_function_matches_exact_posterior_mean_form(p, tau_p, gamma, y):
    fp, ft, mu_z, phi_z = _exact_z(p, tau_p, gamma, y)
    exact = (mu_z - fp) / ft
    got = g_out(p, tau_p, gamma, y)
    assert abs(Fraction(got) - exact) <= Fraction(1e-14) * abs(exact)
    assert 0 < z_posterior(p, tau_p, gamma, y)[1] <= tau_p


@given(pos, pos)
def test_output_derivative_identity(tau_p, gamma):
    _, ft, _, phi_z = _exact_z(0.0, tau_p, gamma, 0.0)
    exact = (ft - phi_z) / ft**2
    assert abs(Fraction(g_out_neg_deriv(tau_p, gamma)) - exact) <= Fraction(1e-14) * exact


@given(real, pos, pos)
def test_input_variance_is_derivative(r, tau, alpha):
    h = 1e-3 * (1 + abs(r))
    deriv = (g_in(r + h, tau, alpha) - g_in(r - h, tau, alpha)) / (2 * h)
    assert g_in_var(tau, alpha) == pytest.approx(tau * deriv, rel=1e-6)


# full GAMP runs

def _problem(seed, m=50, n=100):
    rng = np.random.default_rng(seed)
    return ProblemInstance(gen_matrix(m, n, rng), rng.standard_normal(m))


def _dense_mean(inst, hyper):
    P = hyper.gamma * inst.A.T @ inst.A + np.diag(hyper.alpha)
    return np.linalg.solve(P, hyper.gamma * inst.A.T @ inst.y)


@pytest.mark.parametrize("seed", range(3))
def test_fixed_point_matches_dense_solve(seed):
    # the default stop (squared change 1e-12 N) leaves about 2e-6 error, so tighten it
    inst = _problem(seed)
    hyper = Hyperparams.uniform(inst.n, 1.0, 100.0)
    out = gamp_run(inst, hyper, GampOptions(epsilon=1e-16))
    assert out.converged
    mu = _dense_mean(inst, hyper)
    assert np.linalg.norm(out.mu_x - mu) / np.linalg.norm(mu) <= 1e-6


@pytest.mark.parametrize("seed", range(3))
def test_default_stop_lands_near_dense_solve(seed):
    inst = _problem(seed)
    rng = np.random.default_rng(100 + seed)
    hyper = Hyperparams(rng.uniform(0.5, 2.0, inst.n), 100.0)
    out = gamp_run(inst, hyper)
    assert out.converged
    mu = _dense_mean(inst, hyper)
    assert np.linalg.norm(out.mu_x - mu) / np.linalg.norm(mu) <= 1e-5


def test_scalar_problem_converges_to_posterior_mean():
    inst = ProblemInstance(np.array([[1.0]]), np.array([2.0]))
    out = gamp_run(inst, Hyperparams(np.array([1.0]), 1.0), GampOptions(epsilon=1e-30, max_iters=1000))
    assert out.converged
    assert out.mu_x[0] == pytest.approx(1.0, rel=1e-12)
    # the variance recursion is a large-system approximation; at N=1 it settles on
    # phi = 1/(1 + phi), not the exact posterior variance 1/2
    assert out.phi_x[0] == pytest.approx((np.sqrt(5) - 1) / 2, rel=1e-12)


def test_zero_observation_is_fixed_point():
    inst = _problem(3)
    states = list(iterate_gamp(inst.A, np.zeros(inst.m), np.ones(inst.n), 10.0))
    assert all(not np.any(s.mu_x) for s in states)
    out = gamp_run(ProblemInstance(inst.A, np.zeros(inst.m)), Hyperparams.uniform(inst.n, 1.0, 10.0))
    assert out.converged and out.iters == 1 and not np.any(out.mu_x)


def test_positivity_and_shrinkage_every_iteration():
    inst = _problem(2)
    alpha = np.random.default_rng(2).uniform(0.2, 5.0, inst.n)
    gamma = 30.0
    for s in iterate_gamp(inst.A, inst.y, alpha, gamma, GampOptions(max_iters=40)):
        for v in (s.tau_p, s.tau_s, s.tau_r, s.phi_x):
            assert np.all(v > 0)
        assert np.all(s.phi_x <= np.minimum(s.tau_r, 1 / alpha))
        _, phi_z = z_posterior(s.p_hat, s.tau_p, gamma, inst.y)
        assert np.all(phi_z <= np.minimum(s.tau_p, 1 / gamma))


def test_outputs_positive_and_finite():
    out = gamp_run(_problem(4), Hyperparams.uniform(100, 1.0, 10.0))
    for v in (out.phi_x, out.tau_r, out.tau_p, out.phi_z):
        assert np.all(v > 0) and np.all(np.isfinite(v))


def test_odd_symmetry_is_bitwise():
    inst = _problem(5)
    hyper = Hyperparams.uniform(100, 1.0, 50.0)
    a = gamp_run(inst, hyper)
    b = gamp_run(ProblemInstance(inst.A, -inst.y), hyper)
    np.testing.assert_array_equal(a.mu_x, -b.mu_x)
    np.testing.assert_array_equal(a.phi_x, b.phi_x)
    assert a.iters == b.iters


def test_column_permutation_equivariance():
    inst = _problem(6)
    alpha = np.random.default_rng(0).uniform(0.5, 2.0, inst.n)
    perm = np.random.default_rng(1).permutation(inst.n)
    a = gamp_run(inst, Hyperparams(alpha, 50.0))
    b = gamp_run(ProblemInstance(inst.A[:, perm], inst.y), Hyperparams(alpha[perm], 50.0))
    np.testing.assert_allclose(b.mu_x, a.mu_x[perm], rtol=1e-9, atol=1e-12)


def test_stop_rule_uses_squared_change():
    inst = _problem(7)
    opts = GampOptions(epsilon=1e-6)
    out = gamp_run(inst, Hyperparams.uniform(100, 1.0, 100.0), opts)
    changes = [s.change for s in iterate_gamp(inst.A, inst.y, np.ones(100), 100.0, opts)]
    assert out.converged
    first = next(i for i, c in enumerate(changes) if c <= 1e-6)
    assert out.iters == first + 1


def test_max_iters_reports_not_converged():
    out = gamp_run(_problem(8), Hyperparams.uniform(100, 1.0, 100.0), GampOptions(max_iters=3))
    assert out.iters == 3 and not out.converged


def test_damping_reaches_same_fixed_point():
    inst = _problem(9)
    hyper = Hyperparams.uniform(100, 1.0, 100.0)
    a = gamp_run(inst, hyper)
    b = gamp_run(inst, hyper, GampOptions(damping=0.5, max_iters=2000, epsilon=1e-20))
    assert b.converged
    mu = _dense_mean(inst, hyper)
    assert np.linalg.norm(b.mu_x - mu) / np.linalg.norm(mu) <= 1e-8
    assert np.linalg.norm(a.mu_x - mu) / np.linalg.norm(mu) <= 1e-5


def _hostile():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((40, 80)) + 3.0
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(80)
    x[:5] = 1.0
    return ProblemInstance(A, A @ x)


def test_divergence_raises():
    inst = _hostile()
    with pytest.raises(GampDivergence) as exc:
        gamp_run(inst, Hyperparams.uniform(80, 1.0, 100.0))
    assert exc.value.iteration >= 0


def test_heavy_damping_tames_hostile_matrix():
    out = gamp_run(_hostile(), Hyperparams.uniform(80, 1.0, 100.0),
                   GampOptions(damping=0.2, max_iters=5000))
    assert np.all(np.isfinite(out.mu_x))


def test_options_validation():
    with pytest.raises(ValueError):
        GampOptions(damping=0.0)
    with pytest.raises(ValueError):
        GampOptions(max_iters=0)
    assert GampOptions().tolerance(100) == pytest.approx(1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_problems_stay_finite(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(5, 30)), int(rng.integers(5, 60))
    inst = ProblemInstance(gen_matrix(m, n, rng), rng.standard_normal(m))
    out = gamp_run(inst, Hyperparams(rng.uniform(0.1, 10.0, n), float(rng.uniform(0.1, 10.0))))
    assert np.all(np.isfinite(out.mu_x)) and np.all(out.phi_x > 0)
