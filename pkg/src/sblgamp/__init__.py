"""Sparse Bayesian learning with GAMP-approximated E-steps."""

from .gamp import (GampDivergence, GampOutput, GampState, g_in, g_in_var, g_out,
                   g_out_neg_deriv, gamp_run, iterate_gamp, z_posterior)
from .model import (ALPHA_MAX, ALPHA_MIN, GAMMA_MAX, DomainError, Hyperparams, NumericalError,
                    PriorConfig, ProblemInstance, RecoveryResult, is_success, nmse)
from .options import EmOptions, GampOptions
from .sbl_em import ExactPosterior, e_step_exact, m_step_alpha, m_step_gamma_exact, sbl_em_solve
from .sbl_gamp import (moment_x2, residual_moment, sbl_gamp_solve, update_alpha,
                       update_gamma)
from .synth import TrialSpec, derive_seed, gen_matrix, gen_signal, make_instance

__version__ = "0.1.0"
