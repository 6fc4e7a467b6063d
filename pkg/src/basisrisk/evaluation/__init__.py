"""Metrics beyond linear R²: quantile pseudo-R², CRRA utility, simulation, measurement error."""
from .compare import compare_zone, compare_zones
from .measurement import MeasurementErrorFit, measurement_error_fit
from .quantile import QuantileFit, QuantileR2, check_loss, quantile_fit, quantile_r2_bar
from .simulation import SimulationConfig, SimulationResult, run_simulation, simulate_yields
from .synthetic import OneFactorTruth, equicorrelated_panel, generate_one_factor
from .utility import (
    CoverageResult,
    InsuranceScheme,
    UtilityEvaluation,
    build_scheme,
    certainty_equivalent,
    crra_utility,
    evaluate_eu,
    farm_equivalent_coverage,
)

__all__ = [
    "CoverageResult",
    "InsuranceScheme",
    "MeasurementErrorFit",
    "OneFactorTruth",
    "QuantileFit",
    "QuantileR2",
    "SimulationConfig",
    "SimulationResult",
    "UtilityEvaluation",
    "build_scheme",
    "certainty_equivalent",
    "check_loss",
    "compare_zone",
    "compare_zones",
    "crra_utility",
    "equicorrelated_panel",
    "evaluate_eu",
    "farm_equivalent_coverage",
    "generate_one_factor",
    "measurement_error_fit",
    "quantile_fit",
    "quantile_r2_bar",
    "run_simulation",
    "simulate_yields",
]
