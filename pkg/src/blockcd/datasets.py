"""Synthetic two-class problems, sparse text-format ingestion, preprocessing.

The synthetic generator produces a binary classification task where only
the first T of d features carry signal: class +1 and class -1 relevant
blocks are Gaussian with opposite means (entries drawn from {-1, +1}) and
a shared covariance sampled as G G^T with G a T x T standard normal matrix
(a Wishart draw with T degrees of freedom); the remaining d - T features
are standard normal noise for both classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .losses import DesignMatrix


@dataclass
class ToySpec:
    """Size and seed of one synthetic problem draw."""

    n_train: int = 200
    n_test: int = 1000
    dim: int = 2000
    n_relevant: int = 20
    seed: int = 0

    def __post_init__(self):
        if min(self.n_train, self.n_test, self.dim, self.n_relevant) <= 0:
            raise ValueError("all sizes must be positive")
        if self.n_relevant > self.dim:
            raise ValueError("n_relevant cannot exceed dim")


@dataclass
class LabeledDataset:
    """Features, labels in {-1, +1}, and the standardization that produced them."""

    features: DesignMatrix
    labels: np.ndarray
    standardization: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if len(self.labels) != self.features.n_rows:
            raise ValueError("label count does not match the feature rows")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    @property
    def n_samples(self) -> int:
        return self.features.n_rows

    @property
    def dim(self) -> int:
        return self.features.n_cols


def _sample_class_features(rng, count, mean, chol, dim, n_relevant):
    x = rng.standard_normal((count, dim))
    # relevant block: mean + L z with z the standard normal draw above
    x[:, :n_relevant] = mean + x[:, :n_relevant] @ chol.T
    return x


def generate_toy(spec: ToySpec, shared_covariance: bool = True,
                 relevant_first: bool = True):
    """Draw one (train, test) pair of the synthetic two-class problem.

    ``shared_covariance=False`` draws an independent covariance per class
    (the means stay opposite). ``relevant_first=False`` scatters the
    relevant coordinates at seeded random positions instead of the leading
    indices. Both sets share the same means and covariances; class +1 gets
    the extra sample when a set size is odd.
    """
    rng = np.random.default_rng(spec.seed)
    t = spec.n_relevant

    mu = rng.integers(0, 2, size=t).astype(np.float64) * 2.0 - 1.0
    g = rng.standard_normal((t, t))
    cov_pos = g @ g.T
    if shared_covariance:
        cov_neg = cov_pos
    else:
        g2 = rng.standard_normal((t, t))
        cov_neg = g2 @ g2.T
    jitter = 1e-10 * np.eye(t)
    chol_pos = np.linalg.cholesky(cov_pos + jitter)
    chol_neg = chol_pos if shared_covariance else np.linalg.cholesky(
        cov_neg + jitter)

    if relevant_first:
        positions = np.arange(spec.dim)
    else:
        positions = rng.permutation(spec.dim)

    def draw_set(n):
        n_pos = n - n // 2
        n_neg = n // 2
        x_pos = _sample_class_features(rng, n_pos, mu, chol_pos, spec.dim, t)
        x_neg = _sample_class_features(rng, n_neg, -mu, chol_neg, spec.dim, t)
        x = np.vstack([x_pos, x_neg])[:, np.argsort(positions)]
        y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
        return LabeledDataset(DesignMatrix(x), y)

    return draw_set(spec.n_train), draw_set(spec.n_test)


def standardize(train: LabeledDataset, test: LabeledDataset):
    """Center and scale columns by the training statistics.

    Columns with zero training variance are centered only. The identical
    affine map is applied to the test features so they stay comparable.
    Sparse features are densified first.
    """
    x_train = train.features.toarray()
    x_test = test.features.toarray()
    mean = x_train.mean(axis=0)
    std = x_train.std(axis=0)
    scale = np.where(std == 0.0, 1.0, std)
    train_out = LabeledDataset(DesignMatrix((x_train - mean) / scale),
                               train.labels, standardization=(mean, scale))
    test_out = LabeledDataset(DesignMatrix((x_test - mean) / scale),
                              test.labels, standardization=(mean, scale))
    return train_out, test_out


def load_libsvm(path, n_features: int | None = None) -> LabeledDataset:
    """Load a two-class sparse text dataset (``label index:value ...`` rows).

    Indices are 1-based. The two distinct labels found are mapped to
    {-1, +1} in ascending order (so {0, 1} and {1, 2} schemes both work),
    and a file with more than two distinct labels is rejected.
    """
    rows, cols, vals, raw_labels = [], [], [], []
    max_col = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                raw_labels.append(float(parts[0]))
            except ValueError as exc:
                raise ValueError(
                    f"{path}: line {lineno}: bad label field {parts[0]!r}"
                ) from exc
            row = len(raw_labels) - 1
            for token in parts[1:]:
                try:
                    idx_str, val_str = token.split(":", 1)
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError as exc:
                    raise ValueError(
                        f"{path}: line {lineno}: bad feature token {token!r}"
                    ) from exc
                if idx < 1:
                    raise ValueError(
                        f"{path}: line {lineno}: feature indices are 1-based, "
                        f"got {idx}"
                    )
                rows.append(row)
                cols.append(idx - 1)
                vals.append(val)
                max_col = max(max_col, idx - 1)
    if not raw_labels:
        raise ValueError(f"{path}: no data rows")

    distinct = sorted(set(raw_labels))
    if len(distinct) > 2:
        raise ValueError(
            f"{path}: expected a two-class file, found labels {distinct}"
        )
    labels = np.asarray(raw_labels)
    if len(distinct) == 2:
        labels = np.where(labels == distinct[0], -1.0, 1.0)
    elif distinct[0] not in (-1.0, 1.0):
        raise ValueError(f"{path}: single label {distinct[0]} is not -1 or +1")

    dim = max_col + 1 if n_features is None else n_features
    if dim <= 0:
        raise ValueError(f"{path}: no feature columns found")
    if max_col >= dim:
        raise ValueError(
            f"{path}: feature index {max_col + 1} exceeds n_features={dim}"
        )
    matrix = sp.csc_matrix(
        (vals, (rows, cols)), shape=(len(raw_labels), dim)
    )
    return LabeledDataset(DesignMatrix(matrix), labels)


def save_libsvm(dataset: LabeledDataset, path) -> None:
    """Write the dataset in the 1-based sparse text format."""
    csr = dataset.features.tocsr()
    with open(path, "w") as fh:
        for row in range(csr.shape[0]):
            start, stop = csr.indptr[row], csr.indptr[row + 1]
            feats = " ".join(
                f"{csr.indices[k] + 1}:{csr.data[k]!r}"
                for k in range(start, stop)
            )
            label = int(dataset.labels[row])
            fh.write(f"{label:+d} {feats}".rstrip() + "\n")


def train_test_split(data: LabeledDataset, train_fraction: float, seed: int):
    """Seeded shuffle then split; train gets floor(n * fraction) rows."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = data.n_samples
    n_train = int(n * train_fraction)
    if n_train == 0 or n_train == n:
        raise ValueError(
            f"fraction {train_fraction} leaves an empty side for n={n}"
        )
    order = np.random.default_rng(seed).permutation(n)
    x = (data.features.tocsr() if data.features.is_sparse
         else data.features.toarray())
    train_idx, test_idx = order[:n_train], order[n_train:]

    def subset(idx):
        return LabeledDataset(DesignMatrix(x[idx]), data.labels[idx])

    return subset(train_idx), subset(test_idx)


def classification_rate(dataset: LabeledDataset, x: np.ndarray) -> float:
    """Fraction of samples whose margin sign matches the label.

    A margin of exactly zero counts as an error.
    """
    margins = dataset.features.matvec(x)
    return float(np.mean(dataset.labels * margins > 0))
