"""Symmetric Laplace distributions: densities, sampling and EM estimators."""

from ._core import (
    BesselUnderflow,
    LaplaceError,
    bessel_k,
    bessel_k_log,
    bessel_k_ratio,
    builtin_case_names,
    matsl_char_fn,
    matsl_em_fit,
    matsl_log_pdf,
    matsl_sample,
    mvsl_em_fit,
    mvsl_log_likelihood,
    mvsl_log_pdf,
    mvsl_moment_estimator,
    mvsl_sample,
    mvsl_weight,
    simulate,
)

__all__ = [
    "BesselUnderflow",
    "LaplaceError",
    "bessel_k",
    "bessel_k_log",
    "bessel_k_ratio",
    "builtin_case_names",
    "matsl_char_fn",
    "matsl_em_fit",
    "matsl_log_pdf",
    "matsl_sample",
    "mvsl_em_fit",
    "mvsl_log_likelihood",
    "mvsl_log_pdf",
    "mvsl_moment_estimator",
    "mvsl_sample",
    "mvsl_weight",
    "simulate",
]
