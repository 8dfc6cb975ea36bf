"""Numerical laboratory for mantissa statistics of fragmentation processes."""

from ._version import VERSION as __version__
from .benford import (
    MantissaDistribution,
    benford_cdf,
    benford_digit_prob,
    fold_unit,
    mantissa,
    significand,
)
from .boxfrag import CutDistribution, ProcessConfig, monte_carlo_mantissa
from .diophantine import (
    ContinuedFraction,
    continued_fraction,
    irrationality_exponent_estimate,
    rationality_verdict,
)
from .errors import AccuracyError, CapacityError, ConfigError
from .experiments import Experiment, load_experiment, parse_experiment, run_experiment, sweep
from .orderstats import (
    OrderStatModel,
    QuadratureSpec,
    ak_sequence,
    equidistribution_sum,
    joint_order_pdf,
    main_cdf,
    main_density,
)
from .stick import (
    ProportionVector,
    TruncationParams,
    as_proportions,
    brute_force_mantissa,
    exact_interval_probability,
    exact_mantissa_distribution,
    truncated_estimate,
)

__all__ = [
    "__version__",
    "MantissaDistribution",
    "benford_cdf",
    "benford_digit_prob",
    "fold_unit",
    "mantissa",
    "significand",
    "CutDistribution",
    "ProcessConfig",
    "monte_carlo_mantissa",
    "ContinuedFraction",
    "continued_fraction",
    "irrationality_exponent_estimate",
    "rationality_verdict",
    "AccuracyError",
    "CapacityError",
    "ConfigError",
    "Experiment",
    "load_experiment",
    "parse_experiment",
    "run_experiment",
    "sweep",
    "OrderStatModel",
    "QuadratureSpec",
    "ak_sequence",
    "equidistribution_sum",
    "joint_order_pdf",
    "main_cdf",
    "main_density",
    "ProportionVector",
    "TruncationParams",
    "as_proportions",
    "brute_force_mantissa",
    "exact_interval_probability",
    "exact_mantissa_distribution",
    "truncated_estimate",
]
