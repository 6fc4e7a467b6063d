"""Basis-risk decomposition for area-yield index insurance.

Splits the basis risk of an index into zonal risk (what even the best
yield-weighted index leaves unexplained) and design risk (the extra loss from
using a feasible index instead), and scores candidate indices with linear,
quantile and expected-utility metrics.
"""
from .decomposition import (
    IndexWeights,
    RiskDecomposition,
    beta_vector,
    decompose,
    field_r2,
    optimal_share,
    optimal_weights_avg,
    optimal_weights_total,
    r2_bar,
    r2_diag,
    r2_matrix,
    r2_total,
    regress_fields,
)
from .estimators import OptimalIndex, SubsampleMeanIndex, ZoneMeanIndex
from .indices import (
    DesignRiskReport,
    IndexSeries,
    score_external,
    subsample_experiment,
    subsample_mean_index,
    zone_mean_index,
)
from .moments import MomentSummary, compute_moments, eigen_share, panel_top_eigen, top_eigen
from .panel import (
    ExternalSeries,
    FieldMeta,
    PanelError,
    YieldPanel,
    load_external,
    load_panel,
    neighborhood,
    split_by_zone,
    subset_by_zone,
    write_panel,
)
from .zones import radius_curve, radius_sweep, zonal_sweep

__version__ = "0.1.0"

__all__ = [
    "DesignRiskReport",
    "ExternalSeries",
    "FieldMeta",
    "IndexSeries",
    "IndexWeights",
    "MomentSummary",
    "OptimalIndex",
    "PanelError",
    "RiskDecomposition",
    "SubsampleMeanIndex",
    "YieldPanel",
    "ZoneMeanIndex",
    "beta_vector",
    "compute_moments",
    "decompose",
    "eigen_share",
    "field_r2",
    "load_external",
    "load_panel",
    "neighborhood",
    "optimal_share",
    "optimal_weights_avg",
    "optimal_weights_total",
    "panel_top_eigen",
    "r2_bar",
    "r2_diag",
    "r2_matrix",
    "r2_total",
    "radius_curve",
    "radius_sweep",
    "regress_fields",
    "score_external",
    "split_by_zone",
    "subsample_experiment",
    "subsample_mean_index",
    "subset_by_zone",
    "top_eigen",
    "write_panel",
    "zonal_sweep",
    "zone_mean_index",
]
