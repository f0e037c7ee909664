"""Meta trees that explain where a classifier does well or badly."""

from ._perfex import (
    FormatError,
    MissingScoresError,
    ParseError,
    PerfexError,
    SchemaError,
    Table,
    Tree,
    UndefinedMetricError,
    blobs_tables,
    build_tree,
    evaluate_metric,
    evaluate_tree,
    example2d_table,
    min_samples,
    two_gaussian_table,
    z_for_confidence,
)

__all__ = [
    "FormatError",
    "MissingScoresError",
    "ParseError",
    "PerfexError",
    "SchemaError",
    "Table",
    "Tree",
    "UndefinedMetricError",
    "blobs_tables",
    "build_tree",
    "evaluate_metric",
    "evaluate_tree",
    "example2d_table",
    "min_samples",
    "two_gaussian_table",
    "z_for_confidence",
]
