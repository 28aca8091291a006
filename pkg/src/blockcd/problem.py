"""Problem instances: data, smooth loss, penalty and regularization weight."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockPartition, FlopCounter
from .losses import DesignMatrix, PredictionCache, SmoothLoss, full_gradient
from .penalties import DCPenalty, block_violation


@dataclass
class DesignProblem:
    """One composite minimization instance: f(x) + lam * h(x).

    f(x) = sum_j L((A x)_j; y_j) with A the design matrix and y the labels;
    h is a coordinate-separable DC penalty.
    """

    matrix: DesignMatrix
    labels: np.ndarray
    loss: SmoothLoss
    penalty: DCPenalty
    lam: float

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if len(self.labels) != self.matrix.n_rows:
            raise ValueError(
                f"{len(self.labels)} labels for {self.matrix.n_rows} rows"
            )
        if self.lam < 0:
            raise ValueError("regularization weight must be non-negative")

    @property
    def dim(self) -> int:
        return self.matrix.n_cols

    @property
    def n_samples(self) -> int:
        return self.matrix.n_rows


def objective_value(problem: DesignProblem, x: np.ndarray) -> float:
    """F(x) = f(x) + lam * h(x), evaluated from scratch (uncharged)."""
    margins = problem.matrix.matvec(x)
    smooth = float(np.sum(problem.loss.values(margins, problem.labels)))
    penal = problem.lam * float(np.sum(problem.penalty.value(x)))
    return smooth + penal


def exact_block_violations(problem: DesignProblem, partition: BlockPartition,
                           x: np.ndarray,
                           flops: FlopCounter | None = None) -> np.ndarray:
    """Per-block stationarity violations at x, from one full gradient.

    The full gradient is charged (2 n d + n) to ``flops`` when a counter is
    given; the violation arithmetic itself is not part of the cost model.
    """
    cache = PredictionCache(problem.matrix, x)
    grad = full_gradient(problem.loss, problem.matrix, cache, problem.labels,
                         flops)
    z = np.empty(partition.num_blocks)
    for i, sl in enumerate(partition.slices()):
        z[i] = block_violation(problem.penalty, x[sl], grad[sl], problem.lam)
    return z
