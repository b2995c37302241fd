"""Sparse non-negative quadrature rules: regularized FOCUSS and an l1 / LP baseline."""

from ._core import (
    NumericalError,
    ValidationError,
    apriori_bound,
    build_dataset,
    calibrate_lambda,
    compress,
    fill_distance,
    focuss_solve,
    lp_solve,
    residual_norm_for_lambda,
    run_comparison,
    schrodinger_integrand,
    select_rank,
    trapezoid_rule,
)

__all__ = [
    "NumericalError",
    "ValidationError",
    "apriori_bound",
    "build_dataset",
    "calibrate_lambda",
    "compress",
    "fill_distance",
    "focuss_solve",
    "lp_solve",
    "residual_norm_for_lambda",
    "run_comparison",
    "schrodinger_integrand",
    "select_rank",
    "trapezoid_rule",
]
