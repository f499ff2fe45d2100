"""Functional data classification with deep ReLU networks on FPCA scores."""

from ._core import (
    FDNNModel,
    FdnnError,
    Grid,
    bayes_risk,
    fpca,
    midpoint_grid,
    read_csv,
    run_benchmark,
    simulate,
    write_csv,
)

__all__ = [
    "FDNNModel",
    "FdnnError",
    "Grid",
    "bayes_risk",
    "fpca",
    "midpoint_grid",
    "read_csv",
    "run_benchmark",
    "simulate",
    "write_csv",
]
