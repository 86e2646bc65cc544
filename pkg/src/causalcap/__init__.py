"""Capacities of quantum channels assisted by causally constrained supermaps."""

from .tensor import (
    LabeledOperator,
    LayoutError,
    SystemLayout,
    identity,
    link_product,
    ns_project,
    partial_trace,
    permute_systems,
    tensor,
    trace_and_replace,
)

__version__ = "0.1.0"
