"""Block partitions, per-category flop accounting and convergence trace records.

Coordinates of a d-dimensional iterate are grouped into m contiguous blocks.
All solvers in this package charge their work to a :class:`FlopCounter`
using a symbolic per-operation cost model (counts are formulas in n, d and
the block size d_i, not hardware counters), and report progress as a list
of :class:`TraceRecord` rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FLOP_CATEGORIES = ("gradient", "prox", "cost")


class BlockPartition:
    """Partition of ``total_dim`` coordinates into contiguous blocks.

    Parameters
    ----------
    block_sizes : sequence of int
        Positive sizes d_1 .. d_m. Their sum is the total dimension.
    """

    def __init__(self, block_sizes):
        sizes = tuple(int(s) for s in block_sizes)
        if len(sizes) == 0:
            raise ValueError("partition needs at least one block")
        if any(s <= 0 for s in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        offsets = [0]
        for s in sizes[:-1]:
            offsets.append(offsets[-1] + s)
        self.block_sizes = sizes
        self.block_offsets = tuple(offsets)
        self.total_dim = offsets[-1] + sizes[-1]

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    def slice(self, block_index: int) -> slice:
        """Index range [offset_i, offset_i + d_i) of one block."""
        if not 0 <= block_index < self.num_blocks:
            raise ValueError(
                f"block index {block_index} out of range [0, {self.num_blocks})"
            )
        start = self.block_offsets[block_index]
        return slice(start, start + self.block_sizes[block_index])

    def slices(self):
        """All block index ranges, in block order."""
        return [self.slice(i) for i in range(self.num_blocks)]

    def __eq__(self, other):
        return (
            isinstance(other, BlockPartition)
            and self.block_sizes == other.block_sizes
        )

    def __repr__(self):
        return (
            f"BlockPartition(m={self.num_blocks}, d={self.total_dim}, "
            f"sizes={self.block_sizes[:4]}{'...' if self.num_blocks > 4 else ''})"
        )


def make_uniform_partition(total_dim: int, num_blocks: int) -> BlockPartition:
    """Split ``total_dim`` coordinates into ``num_blocks`` near-equal blocks.

    When ``num_blocks`` does not divide ``total_dim``, the first
    ``total_dim % num_blocks`` blocks get the extra coordinate, so larger
    blocks come first and the layout is deterministic.
    """
    total_dim = int(total_dim)
    num_blocks = int(num_blocks)
    if total_dim <= 0 or num_blocks <= 0:
        raise ValueError("total_dim and num_blocks must be positive")
    if num_blocks > total_dim:
        raise ValueError(
            f"cannot split {total_dim} coordinates into {num_blocks} blocks"
        )
    base, extra = divmod(total_dim, num_blocks)
    sizes = [base + 1] * extra + [base] * (num_blocks - extra)
    return BlockPartition(sizes)


def block_slice(values: np.ndarray, partition: BlockPartition, block_index: int):
    """View of the coordinates of one block; writes go through to ``values``."""
    if len(values) != partition.total_dim:
        raise ValueError(
            f"vector of length {len(values)} does not match partition "
            f"dimension {partition.total_dim}"
        )
    return values[partition.slice(block_index)]


@dataclass
class FlopCounter:
    """Monotone per-category flop tallies (gradient / prox / cost)."""

    gradient_flops: int = 0
    prox_flops: int = 0
    cost_flops: int = 0

    def charge(self, category: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("flop charge must be non-negative")
        if category == "gradient":
            self.gradient_flops += int(amount)
        elif category == "prox":
            self.prox_flops += int(amount)
        elif category == "cost":
            self.cost_flops += int(amount)
        else:
            raise ValueError(
                f"unknown flop category {category!r}, expected one of "
                f"{FLOP_CATEGORIES}"
            )

    @property
    def total(self) -> int:
        return self.gradient_flops + self.prox_flops + self.cost_flops

    def copy(self) -> "FlopCounter":
        return FlopCounter(self.gradient_flops, self.prox_flops, self.cost_flops)


def charge_flops(counter: FlopCounter, category: str, amount: int) -> FlopCounter:
    """Charge ``amount`` flops to one category of ``counter`` and return it."""
    counter.charge(category, amount)
    return counter


# Per-call charges of the symbolic cost model. ``dim`` is the number of
# coordinates touched by the call: d_i for a block update, d for a full one.
def gradient_charge(n_samples: int, dim: int) -> int:
    return 2 * n_samples * dim + n_samples


def prox_charge(dim: int) -> int:
    return dim


def cost_charge(n_samples: int, dim: int) -> int:
    return n_samples * dim + n_samples


@dataclass
class TraceRecord:
    """One row of convergence telemetry.

    ``violation`` is None when no exact optimality check was run at that
    iteration; it serializes to an empty CSV field.
    """

    iteration: int
    flops: int
    objective: float
    violation: float | None = None
    wall_time_s: float = 0.0


TRACE_HEADER = ("iteration", "flops", "objective", "violation", "wall_time_s")


def write_trace(path, records) -> None:
    """Write trace records as CSV with the fixed 5-column schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for r in records:
            viol = "" if r.violation is None else repr(float(r.violation))
            writer.writerow(
                [r.iteration, r.flops, repr(float(r.objective)), viol,
                 repr(float(r.wall_time_s))]
            )


def read_trace(path) -> list[TraceRecord]:
    """Read a trace CSV written by :func:`write_trace`."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise ValueError(f"{path}: missing or unexpected trace header {header}")
        for row in reader:
            if len(row) != 5:
                raise ValueError(f"{path}: malformed trace row {row}")
            records.append(
                TraceRecord(
                    iteration=int(row[0]),
                    flops=int(row[1]),
                    objective=float(row[2]),
                    violation=None if row[3] == "" else float(row[3]),
                    wall_time_s=float(row[4]),
                )
            )
    return records
