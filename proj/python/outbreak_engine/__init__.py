"""Python bindings for the outbreak engine."""

from ._core import (
    ConstantField,
    DimensionMismatch,
    EngineError,
    Forest,
    InsufficientRegions,
    ParseError,
    SchemaMismatch,
    ValidationError,
    contiguity_weights,
    evaluate,
    lisa,
    minmax_scale,
    moran_statistic,
    morans_i,
    parse_districts,
    parse_surveillance_csv,
    population_near_water,
    robust_scale,
    roc_auc,
    run_pipeline,
    set_threads,
    tabulate_area,
    write_mini_region,
    zonal_mean,
)

__all__ = [name for name in dir() if not name.startswith("_")]
