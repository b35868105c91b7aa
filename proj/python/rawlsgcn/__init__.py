"""Degree-fair graph convolutional network training (C++ core)."""

import json

from ._core import (
    BalanceResult,
    DegenerateInputError,
    DegreeGroup,
    EvalReport,
    GraphDataset,
    InputError,
    NonConvergenceError,
    SparseMatrix,
    TrainConfig,
    bias_metric,
    from_edge_list,
    integer_degrees,
    load_dataset,
    make_split,
    normalize,
    propagation_matrix,
    renormalized_laplacian,
    sinkhorn_knopp,
    synthetic_powerlaw,
    train,
)
from ._core import _run_experiment_json


def run_experiment(spec, workers=1, timestamp=""):
    """Run an experiment spec given as a dict; returns the results document as a dict."""
    return json.loads(_run_experiment_json(json.dumps(spec), workers, timestamp))


__all__ = [
    "BalanceResult",
    "DegenerateInputError",
    "DegreeGroup",
    "EvalReport",
    "GraphDataset",
    "InputError",
    "NonConvergenceError",
    "SparseMatrix",
    "TrainConfig",
    "bias_metric",
    "from_edge_list",
    "integer_degrees",
    "load_dataset",
    "make_split",
    "normalize",
    "propagation_matrix",
    "renormalized_laplacian",
    "run_experiment",
    "sinkhorn_knopp",
    "synthetic_powerlaw",
    "train",
]
