"""Block selection rules: uniform, cyclic, and violation-weighted sampling.

The violation-weighted (importance) rule keeps an approximate stationarity
score per block and draws blocks with probability

    p_i = (eps + (1 - eps) z_i / max(z)) / (m eps + (1 - eps) sum(z) / max(z))

so blocks that are far from stationary are visited more often, while the
mixing weight eps keeps every probability at or above eps / m. The score
vector is seeded exactly from a full gradient at the starting point and
thereafter entry i is refreshed whenever block i's partial gradient is
computed, so it is exact per entry at the iterate of that computation and
only approximate as a whole.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockPartition, FlopCounter
from .penalties import DCPenalty, block_violation
from .problem import DesignProblem, exact_block_violations

PROB_SUM_TOL = 1e-12


@dataclass
class ViolationVector:
    """Approximate per-block stationarity violations (entries >= 0)."""

    approx: np.ndarray
    exact_at_init: bool = False

    def __post_init__(self):
        self.approx = np.asarray(self.approx, dtype=np.float64)
        if self.approx.ndim != 1:
            raise ValueError("violation vector must be 1-dimensional")
        if not np.all(np.isfinite(self.approx)) or np.any(self.approx < 0):
            raise ValueError("violations must be finite and non-negative")

    @property
    def num_blocks(self) -> int:
        return len(self.approx)


@dataclass
class SamplingDistribution:
    """Probability vector over blocks with mixing floor eps / m."""

    probs: np.ndarray
    epsilon: float

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        m = len(self.probs)
        if abs(float(np.sum(self.probs)) - 1.0) > PROB_SUM_TOL:
            raise ValueError("probabilities do not sum to 1")
        if np.any(self.probs < self.epsilon / m - PROB_SUM_TOL):
            raise ValueError("probability below the eps/m floor")

    @property
    def num_blocks(self) -> int:
        return len(self.probs)


def importance_probabilities(z, epsilon: float) -> SamplingDistribution:
    """Violation-weighted block distribution with eps-mixing.

    Accepts a :class:`ViolationVector` or a raw non-negative array. When
    every violation is zero the distribution falls back to uniform (the
    weighting is undefined there and the solver treats it as converged);
    epsilon = 1 is exactly uniform.
    """
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    values = z.approx if isinstance(z, ViolationVector) else np.asarray(
        z, dtype=np.float64)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise ValueError("violations must be finite and non-negative")
    m = len(values)
    zmax = float(np.max(values)) if m else 0.0
    if epsilon == 1.0 or zmax == 0.0:
        return SamplingDistribution(np.full(m, 1.0 / m), epsilon)
    scaled = values / zmax
    numer = epsilon + (1.0 - epsilon) * scaled
    denom = m * epsilon + (1.0 - epsilon) * float(np.sum(scaled))
    return SamplingDistribution(numer / denom, epsilon)


def sample_block(dist: SamplingDistribution, rng: np.random.Generator) -> int:
    """Draw one block index by inverse CDF over the cumulative probabilities."""
    u = rng.random()
    cumulative = np.cumsum(dist.probs)
    idx = int(np.searchsorted(cumulative, u, side="right"))
    return min(idx, dist.num_blocks - 1)


def init_violations(problem: DesignProblem, partition: BlockPartition,
                    x0: np.ndarray,
                    flops: FlopCounter | None = None) -> ViolationVector:
    """Seed the score vector with the exact violations at the start point.

    Costs one full gradient, charged at the full-dimension rate.
    """
    z = exact_block_violations(problem, partition, x0, flops)
    return ViolationVector(z, exact_at_init=True)


def update_violation(z: ViolationVector, block_index: int, x_block_old,
                     partial_grad, penalty: DCPenalty,
                     lam: float) -> ViolationVector:
    """Refresh entry ``block_index`` from a freshly computed partial gradient.

    ``x_block_old`` must be the block values at the iterate where
    ``partial_grad`` was evaluated, so the refreshed entry is exact for
    that iterate. Other entries are left untouched.
    """
    z.approx[block_index] = block_violation(penalty, x_block_old, partial_grad,
                                            lam)
    return z


def cyclic_next(counter: int, m: int) -> int:
    """Block visited at step ``counter`` of the cyclic rule."""
    return counter % m


class BlockSelector:
    """Strategy for choosing the block updated at each iteration.

    ``observe(block, violation)`` is called by the solver right after the
    block's partial gradient (and its violation at the pre-step iterate)
    is computed; selectors that do not track violations ignore it.
    """

    requires_violation_seed = False

    def next_block(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def observe(self, block_index: int, violation: float) -> None:
        pass

    def seed_violations(self, z: ViolationVector) -> None:
        pass

    @property
    def converged(self) -> bool:
        """True when the tracked violations certify stationarity."""
        return False


class UniformSelector(BlockSelector):
    """Uniform random block choice (inverse CDF, same draw path as importance)."""

    def __init__(self, num_blocks: int):
        self.dist = SamplingDistribution(np.full(num_blocks, 1.0 / num_blocks),
                                         epsilon=1.0)

    def next_block(self, rng):
        return sample_block(self.dist, rng)


class CyclicSelector(BlockSelector):
    """Deterministic round-robin over the blocks."""

    def __init__(self, num_blocks: int):
        self.num_blocks = num_blocks
        self._counter = 0

    def next_block(self, rng):
        block = cyclic_next(self._counter, self.num_blocks)
        self._counter += 1
        return block


class ImportanceSelector(BlockSelector):
    """Violation-weighted sampling with per-iteration probability refresh."""

    requires_violation_seed = True

    def __init__(self, num_blocks: int, epsilon: float = 0.2):
        if not 0 < epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
        self.num_blocks = num_blocks
        self.epsilon = epsilon
        self.violations = ViolationVector(np.zeros(num_blocks))

    def seed_violations(self, z: ViolationVector) -> None:
        if z.num_blocks != self.num_blocks:
            raise ValueError("violation vector has the wrong number of blocks")
        self.violations = z

    def next_block(self, rng):
        dist = importance_probabilities(self.violations, self.epsilon)
        return sample_block(dist, rng)

    def observe(self, block_index, violation):
        self.violations.approx[block_index] = violation

    @property
    def converged(self):
        return bool(np.all(self.violations.approx == 0.0)
                    and self.violations.exact_at_init)
