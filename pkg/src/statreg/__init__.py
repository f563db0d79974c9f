"""Least squares with stationary errors and plug-in covariance estimates."""

from .autocov import (
    AutocovSequence,
    KernelSpec,
    empirical_autocov,
    kernel_eval,
    pd_projection,
    tapered_sequence,
    toeplitz_expand,
)
from .cov_methods import (
    ArModel,
    MethodConfig,
    ar_theoretical_autocov,
    estimate_covariance,
    fit_ar_yule_walker,
    select_ar_order_aic,
    spectral_proj_coeffs,
    spectral_reconstruct_autocov,
)
from .errors import StatRegError
from .experiments import ExperimentConfig, level_vs_order_curve, run_level_experiment
from .formula import load_csv, parse_formula
from .inference import chi2_test, confint, overall_significance, summary_report, z_statistics
from .ols_core import CovPlugin, OlsFit, RegressionData, fit_ols, plugin_covariance
from .processes import DesignSpec, ProcessSpec, generate, generate_process

__version__ = "0.1.0"

__all__ = [
    "ArModel",
    "AutocovSequence",
    "CovPlugin",
    "DesignSpec",
    "ExperimentConfig",
    "KernelSpec",
    "MethodConfig",
    "OlsFit",
    "ProcessSpec",
    "RegressionData",
    "StatRegError",
    "ar_theoretical_autocov",
    "chi2_test",
    "confint",
    "empirical_autocov",
    "estimate_covariance",
    "fit_ar_yule_walker",
    "fit_ols",
    "generate",
    "generate_process",
    "kernel_eval",
    "level_vs_order_curve",
    "load_csv",
    "overall_significance",
    "parse_formula",
    "pd_projection",
    "plugin_covariance",
    "run_level_experiment",
    "select_ar_order_aic",
    "spectral_proj_coeffs",
    "spectral_reconstruct_autocov",
    "summary_report",
    "tapered_sequence",
    "toeplitz_expand",
    "z_statistics",
]
