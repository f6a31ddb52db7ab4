"""Subgeometric Markov chain convergence toolkit.

Turns a concave drift modulus into executable machinery: compute the
convergence rate it induces, certify drift inequalities on concrete
kernels, interpolate rate/norm trade-offs, and verify predicted rates on
exactly solvable chains at desk scale.
"""

__version__ = "0.1.0"

from .drift import (DriftCertificate, PVOperator, SetSpec, shrink_to_sublevel,
                    tt_condition_i, verify_drift, verify_drift_sequence,
                    verify_moment_bounds)
from .empirical import (fit_rate_exponent, mc_return_moment, power_rate,
                        rate_diagnostic, stretched_rate)
from .kernels import (FiniteKernel, TabooKernel, check_irreducible_aperiodic,
                      expected_return_time, f_norm, first_passage_times,
                      load_kernel, modulated_moment, save_kernel, stationary,
                      taboo_tail, tv_curve)
from .phi import (DriftModulus, h_k, h_phi, h_phi_inv, key_inequality_check,
                  r_phi)
from .rates import (DriftFunctionSeq, RateFunction, asymptotic_rate,
                    classify_regime, is_subgeometric_sequence)
from .young import (YoungPair, conjugate_power_pair, log_pair, mixed_pair,
                    power_pair, tradeoff_table, validate_pair,
                    young_pair_from_density)

__all__ = [
    "DriftModulus", "RateFunction", "DriftFunctionSeq", "h_phi", "h_phi_inv",
    "r_phi", "h_k", "key_inequality_check", "classify_regime",
    "is_subgeometric_sequence", "asymptotic_rate",
    "YoungPair", "power_pair", "conjugate_power_pair", "log_pair",
    "mixed_pair", "young_pair_from_density", "validate_pair",
    "tradeoff_table",
    "FiniteKernel", "TabooKernel", "stationary", "f_norm", "tv_curve",
    "check_irreducible_aperiodic", "taboo_tail", "modulated_moment",
    "first_passage_times", "expected_return_time", "load_kernel",
    "save_kernel",
    "PVOperator", "SetSpec", "DriftCertificate", "verify_drift",
    "shrink_to_sublevel", "verify_drift_sequence", "verify_moment_bounds",
    "tt_condition_i",
    "rate_diagnostic", "fit_rate_exponent", "mc_return_moment", "power_rate",
    "stretched_rate",
]
