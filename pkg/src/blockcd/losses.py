"""Smooth data-fit terms of the form f(x) = sum_j L((A x)_j ; y_j).

The design matrix is stored column-major so that block updates only touch
the columns of the active block, and the predictions A x are cached and
updated incrementally with A_i (x_i_new - x_i_old) instead of being
recomputed from scratch.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .blocks import BlockPartition, FlopCounter, cost_charge, gradient_charge


class DesignMatrix:
    """Column-accessible n x d data matrix.

    Dense input is kept as a Fortran-ordered array (column slices are
    views), sparse input as CSC. Block column submatrices are memoized per
    partition because repeated sparse column slicing is expensive.
    """

    def __init__(self, values):
        if sp.issparse(values):
            mat = values.tocsc().astype(np.float64)
            if not np.all(np.isfinite(mat.data)):
                raise ValueError("design matrix contains non-finite values")
            self._sparse = True
        else:
            mat = np.asfortranarray(np.asarray(values, dtype=np.float64))
            if mat.ndim != 2:
                raise ValueError("design matrix must be 2-dimensional")
            if not np.all(np.isfinite(mat)):
                raise ValueError("design matrix contains non-finite values")
            self._sparse = False
        self._mat = mat
        self._block_cache = (None, None)  # (partition, list of submatrices)

    @property
    def shape(self):
        return self._mat.shape

    @property
    def n_rows(self) -> int:
        return self._mat.shape[0]

    @property
    def n_cols(self) -> int:
        return self._mat.shape[1]

    @property
    def is_sparse(self) -> bool:
        return self._sparse

    def columns(self, start: int, stop: int):
        """Submatrix of columns [start, stop)."""
        return self._mat[:, start:stop]

    def block(self, partition: BlockPartition, block_index: int):
        """Columns of one block, memoized for the most recent partition."""
        if partition.total_dim != self.n_cols:
            raise ValueError(
                f"partition covers {partition.total_dim} coordinates but the "
                f"matrix has {self.n_cols} columns"
            )
        if not 0 <= block_index < partition.num_blocks:
            raise ValueError(
                f"block index {block_index} out of range "
                f"[0, {partition.num_blocks})"
            )
        cached_partition, blocks = self._block_cache
        if cached_partition is not partition:
            blocks = [self.columns(s.start, s.stop) for s in partition.slices()]
            self._block_cache = (partition, blocks)
        return blocks[block_index]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._mat @ x)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(self._mat.T @ v)

    def toarray(self) -> np.ndarray:
        if self._sparse:
            return self._mat.toarray()
        return np.array(self._mat)

    def tocsr(self):
        return self._mat.tocsr() if self._sparse else sp.csr_matrix(self._mat)


class SmoothLoss:
    """Pointwise margin loss: per-sample value L(t; y) and derivative dL/dt."""

    def values(self, margins, labels):
        raise NotImplementedError

    def derivatives(self, margins, labels):
        raise NotImplementedError


class LogisticLoss(SmoothLoss):
    """Binary logistic loss L(t; y) = log(1 + exp(-y t)) for labels y in {-1, +1}.

    Both the value (via logaddexp) and the derivative (via a clipped-exponent
    sigmoid) are evaluated in the numerically stable form, so margins of
    magnitude in the hundreds neither overflow nor lose the tiny tail values.
    """

    def values(self, margins, labels):
        return np.logaddexp(0.0, -np.asarray(labels) * np.asarray(margins))

    def derivatives(self, margins, labels):
        labels = np.asarray(labels, dtype=np.float64)
        yt = labels * np.asarray(margins)
        # sigmoid(-yt) without overflow: exp of a non-positive argument only
        out = np.empty_like(yt)
        pos = yt >= 0
        out[pos] = np.exp(-yt[pos]) / (1.0 + np.exp(-yt[pos]))
        out[~pos] = 1.0 / (1.0 + np.exp(yt[~pos]))
        return -labels * out


class PredictionCache:
    """Cached predictions A x, kept in sync with the iterate incrementally.

    The cache owns a private copy of x so it can run a periodic full
    recompute (every ``refresh_every`` committed updates) that bounds the
    accumulated round-off of the incremental updates.
    """

    REFRESH_EVERY = 10_000

    def __init__(self, matrix: DesignMatrix, x, refresh_every: int | None = None):
        x = np.asarray(x, dtype=np.float64)
        if len(x) != matrix.n_cols:
            raise ValueError(
                f"iterate of length {len(x)} does not match {matrix.n_cols} columns"
            )
        self.matrix = matrix
        self._x = x.copy()
        self.margins = matrix.matvec(self._x)
        self.refresh_every = refresh_every or self.REFRESH_EVERY
        self._updates = 0

    @property
    def x(self) -> np.ndarray:
        """The iterate the margins correspond to (read-only by convention)."""
        return self._x

    def tentative_margins(self, block_matrix, old_values, new_values) -> np.ndarray:
        """Margins after a candidate block step, without committing it."""
        delta = np.asarray(new_values, dtype=np.float64) - old_values
        return self.margins + np.asarray(block_matrix @ delta)

    def commit(self, block_sl: slice, new_values, new_margins,
               flops: FlopCounter | None = None) -> None:
        """Adopt a block update whose margins were already computed."""
        self._x[block_sl] = new_values
        self.margins = new_margins
        self._updates += 1
        if self._updates % self.refresh_every == 0:
            self.refresh(flops)

    def refresh(self, flops: FlopCounter | None = None) -> None:
        """Full recompute of the margins; charges one n*d cost block."""
        self.margins = self.matrix.matvec(self._x)
        if flops is not None:
            flops.charge("cost", self.matrix.n_rows * self.matrix.n_cols)


def update_cache(cache: PredictionCache, partition: BlockPartition,
                 block_index: int, old_values, new_values,
                 flops: FlopCounter | None = None) -> PredictionCache:
    """Apply margins += A_i (new - old) for one block and commit it."""
    sl = partition.slice(block_index)
    d_i = sl.stop - sl.start
    old_values = np.asarray(old_values, dtype=np.float64)
    new_values = np.asarray(new_values, dtype=np.float64)
    if len(old_values) != d_i or len(new_values) != d_i:
        raise ValueError(
            f"block {block_index} has {d_i} coordinates, got vectors of length "
            f"{len(old_values)} and {len(new_values)}"
        )
    block_matrix = cache.matrix.block(partition, block_index)
    new_margins = cache.tentative_margins(block_matrix, old_values, new_values)
    cache.commit(sl, new_values, new_margins, flops)
    return cache


def loss_value(loss: SmoothLoss, cache: PredictionCache, labels,
               flops: FlopCounter | None = None,
               updated_dim: int | None = None) -> float:
    """f(x) = sum_j L(margin_j; y_j) from cached margins.

    ``updated_dim`` is the number of coordinates whose change produced the
    current margins (d for a fresh evaluation, d_i after a block update);
    it sets the cost charge n*updated_dim + n.
    """
    margins = cache.margins
    if not np.all(np.isfinite(margins)):
        raise FloatingPointError("non-finite margins in loss evaluation")
    value = float(np.sum(loss.values(margins, labels)))
    if flops is not None:
        dim = cache.matrix.n_cols if updated_dim is None else updated_dim
        flops.charge("cost", cost_charge(cache.matrix.n_rows, dim))
    return value


def partial_gradient(loss: SmoothLoss, matrix: DesignMatrix,
                     cache: PredictionCache, labels,
                     partition: BlockPartition, block_index: int,
                     flops: FlopCounter | None = None) -> np.ndarray:
    """Gradient restricted to one block: A_i^T L'(A x)."""
    block_matrix = matrix.block(partition, block_index)
    derivs = loss.derivatives(cache.margins, labels)
    grad = np.asarray(block_matrix.T @ derivs)
    if flops is not None:
        flops.charge(
            "gradient",
            gradient_charge(matrix.n_rows, partition.block_sizes[block_index]),
        )
    return grad


def full_gradient(loss: SmoothLoss, matrix: DesignMatrix,
                  cache: PredictionCache, labels,
                  flops: FlopCounter | None = None) -> np.ndarray:
    """Full gradient A^T L'(A x)."""
    derivs = loss.derivatives(cache.margins, labels)
    grad = matrix.rmatvec(derivs)
    if flops is not None:
        flops.charge("gradient", gradient_charge(matrix.n_rows, matrix.n_cols))
    return grad
