"""The four worked example chains, each exposing a sampler, a PV operator
and theorem-prescribed drift-certificate ingredients."""

from .brt import (BackwardRecurrenceSpec, ConstantRegime, LogarithmicRegime,
                  PolynomialRegime, SubexponentialRegime, brt_certificate,
                  brt_exact_tail, brt_kernel, brt_log_tails, brt_step)
from .noise import LaplaceNoise, SymmetrizedWeibullNoise, noise_expectation
from .nar import NonlinearARSpec, nar_pv, nar_step
from .rwm import RandomWalkMetropolisSpec, rwm_pv, rwm_step
from .sur import StochasticUnitRootSpec, minorization_floor, sur_pv, sur_step

from . import brt, nar, rwm, sur

__all__ = [
    "BackwardRecurrenceSpec", "ConstantRegime", "LogarithmicRegime",
    "PolynomialRegime", "SubexponentialRegime", "brt_certificate",
    "brt_exact_tail", "brt_kernel", "brt_log_tails", "brt_step",
    "LaplaceNoise", "SymmetrizedWeibullNoise", "noise_expectation",
    "NonlinearARSpec", "nar_pv", "nar_step",
    "RandomWalkMetropolisSpec", "rwm_pv", "rwm_step",
    "StochasticUnitRootSpec", "minorization_floor", "sur_pv", "sur_step",
    "brt", "nar", "rwm", "sur",
]


def sample_path(spec, x0, n, seed):
    """Dispatch to the model's deterministic seeded trajectory sampler."""
    if isinstance(spec, BackwardRecurrenceSpec):
        return brt.sample_path(spec, x0, n, seed)
    if isinstance(spec, RandomWalkMetropolisSpec):
        return rwm.sample_path(spec, x0, n, seed)
    if isinstance(spec, NonlinearARSpec):
        return nar.sample_path(spec, x0, n, seed)
    if isinstance(spec, StochasticUnitRootSpec):
        return sur.sample_path(spec, x0, n, seed)
    raise TypeError(f"unknown model spec {type(spec).__name__}")
