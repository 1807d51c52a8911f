"""Secular coefficients of circular ensembles and holomorphic chaos.

Library layout:
  series    truncated power-series arithmetic (products, exp, Sobolev sums)
  hmc       chaos-coefficient sampling and functionals
  cbe       characteristic polynomials via the Szego recurrence
  combinat  exact moments from weighted magic-square enumeration
  ewens     exact cycle-structure distributions and their limit laws
  harness   reproducible statistical experiments with reports
  cli       `secular` command-line entry point
"""

from .series import CoefficientSeries, series_exp, series_multiply, \
    sobolev_partial_norm
from .streams import GaussianStream
from .hmc import HmcSample, sample_hmc, constrained_coeffs, martingale_approx, \
    bracket_process, gmc_mass_approx, sobolev_diagnostic, sobolev_threshold
from .cbe import VerblunskyState, SecularSample, sample_verblunsky, szego_step, \
    sample_secular, coefficient_martingale, expected_bracket_dp, \
    haake_second_moment, haar_unitary_oracle, rejection_oracle_small_n
from .combinat import MagicSquare, gen_binom, enumerate_magic, count_magic, \
    joint_moment, abs_moment_2k, morris_ratio_limit, morris_integral_numeric, \
    constrained_second_moment, constrained_fourth_moment, identity_checks
from .ewens import CycleCounts, ewens_pmf, sample_ewens, t0n_pmf, \
    longest_cycle_cdf, longest_cycle_cdf_table, shortest_cycle_survival, \
    p_theta, limit_longest_cdf, c_delta
from .harness import ExperimentConfig, ExperimentReport, run_experiment, \
    sample_limit_law

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
