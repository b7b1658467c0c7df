"""L2-regularized factorized matrix models, their nuclear-norm counterparts, and diagnostics."""

from ._jit import ENABLED as NUMBA_ENABLED
from .factorized import (
    DeepChain,
    Direct,
    ElementwiseProduct,
    Factorization,
    balance_gap,
    balanced_chain_from,
    balanced_factors_from,
    chain_balance_and_bound,
    product,
    regularizer_gap_with_bound,
)
from .objectives import (
    AffineDistance,
    MaskedCompletion,
    MatrixRegression,
    WhitenedRegression,
    evaluate_both_losses,
    factor_gradients,
    make_affine_distance,
    make_masked_completion,
    make_matrix_regression,
    make_whitened_regression,
    param_gradients,
)
from .optim import DivergenceError, OptimizerConfig, Trace, TraceRecord, run_training
from .oracles import adamw_l2_equivalent, fit_exponential_rate, single_matrix_equilibrium, svt_minimizer, two_layer_equilibrium
from .spectra import SVDConvergenceError, nuclear_norm, pseudo_rank, schatten_power, singular_values, spectrum_report, svd

__version__ = "0.1.0"

__all__ = [
    "AffineDistance",
    "DeepChain",
    "Direct",
    "DivergenceError",
    "ElementwiseProduct",
    "Factorization",
    "MaskedCompletion",
    "MatrixRegression",
    "NUMBA_ENABLED",
    "OptimizerConfig",
    "SVDConvergenceError",
    "Trace",
    "TraceRecord",
    "WhitenedRegression",
    "adamw_l2_equivalent",
    "balance_gap",
    "balanced_chain_from",
    "balanced_factors_from",
    "chain_balance_and_bound",
    "evaluate_both_losses",
    "factor_gradients",
    "fit_exponential_rate",
    "make_affine_distance",
    "make_masked_completion",
    "make_matrix_regression",
    "make_whitened_regression",
    "nuclear_norm",
    "param_gradients",
    "product",
    "pseudo_rank",
    "regularizer_gap_with_bound",
    "run_training",
    "schatten_power",
    "single_matrix_equilibrium",
    "singular_values",
    "spectrum_report",
    "svd",
    "svt_minimizer",
    "two_layer_equilibrium",
]
