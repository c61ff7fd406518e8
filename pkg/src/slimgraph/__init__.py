"""Lossy graph compression kernels, schemes, and accuracy metrics."""
from slimgraph.graph import (
    EdgeId,
    EdgeListParseError,
    EdgeListValidationError,
    Graph,
    Triangle,
    apply_deletions,
    degree_histogram,
    enumerate_triangles,
    load_edge_list,
    triangles_per_edge,
    write_edge_list,
)

__version__ = "0.1.0"
