"""Randomized block-coordinate proximal gradient descent, monotone variant.

One iteration draws a block, takes a proximal gradient step on that block
with a per-block curvature estimate (a block-wise secant rule), and
backtracks geometrically until the objective decrease is at least
``sigma / 2`` times the squared step norm. With a single block the loop is
exactly monotone full proximal gradient descent with the classical secant
step, which is also exposed directly as :func:`gist_solve`.

All work is charged to a symbolic flop counter: per iteration the partial
gradient costs ``2 n d_i + n``, each proximal step ``d_i`` and each
objective evaluation ``n d_i + n`` (full-dimension rates with d in place
of d_i). Diagnostic exact-violation checks are charged to a separate
counter so comparison traces stay on the algorithmic cost axis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .blocks import (BlockPartition, FlopCounter, TraceRecord, cost_charge,
                     gradient_charge, make_uniform_partition, prox_charge)
from .losses import PredictionCache
from .problem import DesignProblem, exact_block_violations
from .sampling import BlockSelector, CyclicSelector, init_violations


@dataclass
class SolverConfig:
    """Knobs of the block proximal gradient loop.

    ``check_violation_every`` enables periodic exact stationarity checks
    (an extra full gradient each, charged to the diagnostic counter) and
    with them the ``violation_tolerance`` stopping rule; None disables
    them. With a single block the exact violation falls out of the
    iteration's own gradient, so the tolerance rule is always active there
    at no extra cost.
    """

    sigma: float = 1e-5
    eta: float = 2.0
    theta_min: float = 1e-10
    theta_max: float = 1e10
    theta_init: float = 1.0
    max_iterations: int = 1000
    max_backtracks: int = 64
    violation_tolerance: float = 1e-3
    check_violation_every: int | None = None
    seed: int = 0
    decrease_norm_power: int = 2
    trace_every: int = 1
    record_wall_time: bool = False
    cache_refresh_every: int = 10_000

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.eta <= 1:
            raise ValueError("eta must be greater than 1")
        if not 0 < self.theta_min <= self.theta_max:
            raise ValueError("need 0 < theta_min <= theta_max")
        if not self.theta_min <= self.theta_init <= self.theta_max:
            raise ValueError("theta_init must lie in [theta_min, theta_max]")
        if self.max_iterations <= 0 or self.max_backtracks < 0:
            raise ValueError("iteration limits must be positive")
        if self.violation_tolerance < 0:
            raise ValueError("violation tolerance must be non-negative")
        if self.decrease_norm_power not in (1, 2):
            raise ValueError("decrease_norm_power must be 1 or 2")
        if self.trace_every <= 0:
            raise ValueError("trace_every must be positive")
        if self.check_violation_every is not None and self.check_violation_every <= 0:
            raise ValueError("check_violation_every must be positive or None")


@dataclass
class SolveResult:
    """Final iterate plus everything needed to audit the run."""

    x: np.ndarray
    trace: list[TraceRecord]
    termination: str
    flops: FlopCounter
    diagnostic_flops: FlopCounter
    iterations: int
    thetas: np.ndarray


def sufficient_decrease_test(f_new: float, f_old: float, x_new, x_old,
                             sigma: float, power: int = 2) -> bool:
    """Accept iff F_new <= F_old - (sigma/2) * ||x_new - x_old||^power.

    Non-finite candidate objectives never pass, which is what sends the
    line search into another backtracking step instead of raising.
    """
    if not np.isfinite(f_new):
        return False
    delta = np.linalg.norm(np.asarray(x_new) - np.asarray(x_old))
    return f_new <= f_old - 0.5 * sigma * delta ** power


def bb_step_update(theta: float, dx_block, dg_block, theta_min: float,
                   theta_max: float) -> float:
    """Secant curvature estimate dx.dg / dx.dx, clamped to [theta_min, theta_max].

    Degenerate pairs (zero step, non-positive or non-finite ratio) keep the
    previous estimate.
    """
    dx = np.asarray(dx_block, dtype=np.float64)
    dg = np.asarray(dg_block, dtype=np.float64)
    denom = float(dx @ dx)
    if denom == 0.0:
        return theta
    ratio = float(dx @ dg) / denom
    if not np.isfinite(ratio) or ratio <= 0.0:
        return theta
    return float(min(max(ratio, theta_min), theta_max))


def compute_exact_violation(problem: DesignProblem, partition: BlockPartition,
                            x: np.ndarray, flops: FlopCounter | None = None):
    """Per-block stationarity violations and their maximum at x.

    Costs one full gradient, charged to ``flops`` when given.
    """
    z = exact_block_violations(problem, partition, x, flops)
    return z, float(np.max(z))


def _candidate_objective(loss, labels, margins, smooth_plus_penalty_rest,
                         penalty, lam, cand_block):
    """F at a candidate block value; +inf instead of raising on overflow."""
    if not np.all(np.isfinite(margins)):
        return np.inf
    smooth = float(np.sum(loss.values(margins, labels)))
    penal = lam * float(np.sum(penalty.value(cand_block)))
    value = smooth + smooth_plus_penalty_rest + penal
    return value if np.isfinite(value) else np.inf


def rbcd_solve(problem: DesignProblem, partition: BlockPartition,
               selector: BlockSelector, config: SolverConfig,
               x0: np.ndarray | None = None, callback=None) -> SolveResult:
    """Minimize f + lam*h by randomized block proximal gradient descent.

    Per iteration: draw a block from ``selector``, compute its partial
    gradient, refresh the selector's violation score for that block,
    re-estimate the block step from the stored secant pair, then take the
    proximal step and backtrack (step divided by eta^j) until the monotone
    decrease test passes. Predictions are updated incrementally.

    ``callback(info)`` is invoked after every accepted iteration with a
    dict holding iteration, block, x_before, x_after, f_before, f_after,
    step_norm_sq, backtracks, and the block violation; returning True from
    the callback stops the run early (termination "callback").

    Termination: "max_iterations", "violation_below_tolerance" (periodic
    exact checks, or every iteration when m == 1),
    "converged_zero_violations" (tracked violations identically zero),
    "backtrack_failure" (decrease test unsatisfied after max_backtracks;
    the last accepted iterate is returned), or "callback".
    """
    d = problem.dim
    n = problem.n_samples
    m = partition.num_blocks
    lam = problem.lam
    loss, penalty, labels = problem.loss, problem.penalty, problem.labels
    if partition.total_dim != d:
        raise ValueError("partition does not match the problem dimension")

    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    if len(x) != d:
        raise ValueError(f"x0 has length {len(x)}, expected {d}")

    rng = np.random.default_rng(config.seed)
    flops = FlopCounter()
    diag_flops = FlopCounter()
    start_time = time.perf_counter() if config.record_wall_time else None

    cache = PredictionCache(problem.matrix, x,
                            refresh_every=config.cache_refresh_every)
    # initial objective: one full cost evaluation (n d + n)
    f_smooth = float(np.sum(loss.values(cache.margins, labels)))
    f_penalty = lam * float(np.sum(penalty.value(x)))
    f_cur = f_smooth + f_penalty
    flops.charge("cost", cost_charge(n, d))

    thetas = np.full(m, float(config.theta_init))
    prev_x = np.zeros(d)       # block values at each block's last gradient point
    prev_g = np.zeros(d)       # that gradient
    has_pair = np.zeros(m, dtype=bool)
    block_mats = [problem.matrix.block(partition, i) for i in range(m)]
    slices = partition.slices()

    initial_violation = None
    if selector.requires_violation_seed:
        z0 = init_violations(problem, partition, x, flops)
        selector.seed_violations(z0)
        initial_violation = float(np.max(z0.approx))
    elif config.check_violation_every is not None:
        _, initial_violation = compute_exact_violation(problem, partition, x,
                                                       diag_flops)

    def elapsed():
        return 0.0 if start_time is None else time.perf_counter() - start_time

    trace = [TraceRecord(0, flops.total, f_cur, initial_violation, elapsed())]
    termination = "max_iterations"
    iterations = 0
    flops_after_iter = flops.total

    for k in range(1, config.max_iterations + 1):
        if selector.converged:
            termination = "converged_zero_violations"
            break

        i = selector.next_block(rng)
        sl = slices[i]
        d_i = partition.block_sizes[i]
        a_i = block_mats[i]
        x_i = x[sl]

        derivs = loss.derivatives(cache.margins, labels)
        g_i = np.asarray(a_i.T @ derivs)
        flops.charge("gradient", gradient_charge(n, d_i))

        viol_i = _block_violation_fast(penalty, x_i, g_i, lam)
        selector.observe(i, viol_i)

        if m == 1:
            # the block gradient is the full gradient, so viol_i is the
            # exact violation of the pre-step iterate x^{k-1}
            if trace[-1].iteration == k - 1 and trace[-1].violation is None:
                trace[-1].violation = viol_i
            if viol_i <= config.violation_tolerance:
                if trace[-1].iteration != k - 1:
                    trace.append(TraceRecord(k - 1, flops_after_iter, f_cur,
                                             viol_i, elapsed()))
                termination = "violation_below_tolerance"
                break

        if has_pair[i]:
            thetas[i] = bb_step_update(thetas[i], x_i - prev_x[sl],
                                       g_i - prev_g[sl], config.theta_min,
                                       config.theta_max)
        prev_x[sl] = x_i
        prev_g[sl] = g_i
        has_pair[i] = True

        rest = f_penalty - lam * float(np.sum(penalty.value(x_i)))
        accepted = False
        cand = x_i
        cand_margins = cache.margins
        f_cand = f_cur
        backtracks = 0
        for j in range(config.max_backtracks + 1):
            step = 1.0 / (thetas[i] * config.eta ** j)
            cand = penalty.prox(x_i - step * g_i, lam * step)
            flops.charge("prox", prox_charge(d_i))
            flops.charge("cost", cost_charge(n, d_i))
            if _is_zero_step(cand, x_i):
                # the prox does not move this block at working precision;
                # recomputing F here only injects round-off, so accept the
                # step as exactly zero and keep the running objective
                cand = x_i
                cand_margins = cache.margins
                f_cand = f_cur
                accepted = True
                backtracks = j
                break
            cand_margins = cache.tentative_margins(a_i, x_i, cand)
            smooth_cand = (np.inf if not np.all(np.isfinite(cand_margins))
                           else float(np.sum(loss.values(cand_margins, labels))))
            f_cand = smooth_cand + rest + lam * float(np.sum(penalty.value(cand)))
            if sufficient_decrease_test(f_cand, f_cur, cand, x_i, config.sigma,
                                        config.decrease_norm_power):
                accepted = True
                backtracks = j
                break
        if not accepted:
            termination = "backtrack_failure"
            break

        x_before_cb = x.copy() if callback is not None else None
        step_delta = cand - x_i
        cache.commit(sl, cand, cand_margins, flops)
        x[sl] = cand
        f_penalty = rest + lam * float(np.sum(penalty.value(cand)))
        f_prev = f_cur
        f_cur = f_cand
        iterations = k
        flops_after_iter = flops.total

        checked_violation = None
        if (config.check_violation_every is not None
                and k % config.check_violation_every == 0):
            _, checked_violation = compute_exact_violation(problem, partition,
                                                           x, diag_flops)

        if k % config.trace_every == 0 or checked_violation is not None:
            trace.append(TraceRecord(k, flops.total, f_cur, checked_violation,
                                     elapsed()))

        if callback is not None:
            info = {
                "iteration": k,
                "block": i,
                "x_before": x_before_cb,
                "x_after": x.copy(),
                "f_before": f_prev,
                "f_after": f_cur,
                "step_norm_sq": float(step_delta @ step_delta),
                "backtracks": backtracks,
                "block_violation": viol_i,
                "theta": float(thetas[i]),
            }
            if callback(info):
                termination = "callback"
                break

        if (checked_violation is not None
                and checked_violation <= config.violation_tolerance):
            termination = "violation_below_tolerance"
            break

    if trace[-1].iteration != iterations:
        trace.append(TraceRecord(iterations, flops_after_iter, f_cur, None,
                                 elapsed()))

    return SolveResult(x=x, trace=trace, termination=termination, flops=flops,
                       diagnostic_flops=diag_flops, iterations=iterations,
                       thetas=thetas)


def _block_violation_fast(penalty, x_block, grad_block, lam):
    """block_violation without the shape-checking wrapper (hot path)."""
    lo, hi = penalty.convex_subdiff(x_block)
    target = lam * penalty.concave_grad(x_block) - grad_block
    gap = np.maximum(np.maximum(lam * lo - target, target - lam * hi), 0.0)
    return float(np.max(gap))


def _is_zero_step(cand, x_block) -> bool:
    """True when every coordinate moved by at most a few ulps."""
    diff = np.abs(cand - x_block)
    bound = 8e-16 * np.maximum(np.abs(cand), np.abs(x_block)) + 1e-307
    return bool(np.all(diff <= bound))


def gist_solve(problem: DesignProblem, config: SolverConfig,
               x0: np.ndarray | None = None, callback=None) -> SolveResult:
    """Full proximal gradient descent: the single-block case of the loop.

    Every iteration computes the full gradient, so the exact stationarity
    violation is checked against ``violation_tolerance`` at no extra cost.
    """
    partition = make_uniform_partition(problem.dim, 1)
    return rbcd_solve(problem, partition, CyclicSelector(1), config, x0,
                      callback)
