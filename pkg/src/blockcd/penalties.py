"""Separable sparsity penalties with a difference-of-convex structure.

Each penalty h acts coordinate-wise and is written as h = h1 - h2 with h1
and h2 convex. That split gives two things in closed form:

* the scaled proximal operator ``argmin_t 0.5 (t - v)^2 + c h(t)``, and
* a stationarity certificate per coordinate: the distance from
  ``lam * grad_h2 - grad_f`` to the interval ``lam * subdiff_h1``, which is
  zero exactly when the coordinate satisfies the necessary optimality
  condition of the composite objective f + lam * h.
"""

from __future__ import annotations

import numpy as np

from .blocks import FlopCounter, prox_charge

# Interior prox candidates within this objective gap of t = 0 lose the tie;
# zero is preferred so near-ties do not destroy sparsity.
PROX_TIE_GAP = 1e-12


class DCPenalty:
    """Coordinate-separable penalty h = h1 - h2 with h1, h2 convex.

    Subclasses implement vectorized per-coordinate operations; h2 must be
    differentiable (single-valued gradient) for the violation formulas used
    here.
    """

    def value(self, t):
        """Per-coordinate penalty h(t)."""
        raise NotImplementedError

    def convex_value(self, t):
        """Per-coordinate convex part h1(t)."""
        raise NotImplementedError

    def concave_value(self, t):
        """Per-coordinate subtracted convex part h2(t)."""
        raise NotImplementedError

    def convex_subdiff(self, t):
        """Closed interval [lo, hi] of the subdifferential of h1 at t."""
        raise NotImplementedError

    def concave_grad(self, t):
        """Gradient of h2 at t (single-valued)."""
        raise NotImplementedError

    def prox(self, v, c: float):
        """Coordinate-wise global minimizer of 0.5 (t - v)^2 + c h(t), c >= 0."""
        raise NotImplementedError


class L1Penalty(DCPenalty):
    """The absolute value penalty h(t) = |t|; h1 = |t|, h2 = 0."""

    def value(self, t):
        return np.abs(t)

    def convex_value(self, t):
        return np.abs(t)

    def concave_value(self, t):
        return np.zeros_like(np.asarray(t, dtype=np.float64))

    def convex_subdiff(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = np.sign(t)
        lo = np.where(t == 0.0, -1.0, s)
        hi = np.where(t == 0.0, 1.0, s)
        return lo, hi

    def concave_grad(self, t):
        return np.zeros_like(np.asarray(t, dtype=np.float64))

    def prox(self, v, c: float):
        if c < 0:
            raise ValueError("prox scale must be non-negative")
        v = np.asarray(v, dtype=np.float64)
        return np.sign(v) * np.maximum(np.abs(v) - c, 0.0)


class LogSumPenalty(DCPenalty):
    """Log-sum penalty h(t) = rho * log(1 + |t| / rho), rho > 0.

    Interpolates between the absolute value (large rho) and a capped,
    nearly counting-like penalty (small rho). DC split: h1(t) = |t| and
    h2(t) = |t| - rho * log(1 + |t| / rho), both convex, with h2
    differentiable everywhere and h2'(0) = 0.
    """

    def __init__(self, rho: float):
        rho = float(rho)
        if not rho > 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.rho = rho

    def value(self, t):
        return self.rho * np.log1p(np.abs(t) / self.rho)

    def convex_value(self, t):
        return np.abs(t)

    def concave_value(self, t):
        return np.abs(t) - self.rho * np.log1p(np.abs(t) / self.rho)

    def convex_subdiff(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = np.sign(t)
        lo = np.where(t == 0.0, -1.0, s)
        hi = np.where(t == 0.0, 1.0, s)
        return lo, hi

    def concave_grad(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.sign(t) * np.abs(t) / (self.rho + np.abs(t))

    def prox(self, v, c: float):
        """Closed-form prox via the roots of t^2 + (rho - |v|) t + (c - |v|) rho.

        Stationary points of the scalar objective on t > 0 are the real
        roots of that quadratic; the returned value is the best of t = 0
        and the feasible roots in (0, |v|]. A negative discriminant means
        the objective is increasing on t >= 0 and the prox collapses to 0,
        so the square root is masked to avoid NaN.
        """
        if c < 0:
            raise ValueError("prox scale must be non-negative")
        v = np.asarray(v, dtype=np.float64)
        if c == 0:
            return v.copy()
        scalar = v.ndim == 0
        v = np.atleast_1d(v)
        a = np.abs(v)
        rho = self.rho
        disc = (a + rho) ** 2 - 4.0 * c * rho
        sqrt_disc = np.sqrt(np.maximum(disc, 0.0))
        has_roots = disc >= 0.0
        r_hi = np.where(has_roots, np.clip(((a - rho) + sqrt_disc) / 2.0, 0.0, a), 0.0)
        r_lo = np.where(has_roots, np.clip(((a - rho) - sqrt_disc) / 2.0, 0.0, a), 0.0)

        def objective(t):
            return 0.5 * (t - a) ** 2 + c * rho * np.log1p(t / rho)

        obj0 = objective(np.zeros_like(a))
        best = np.where(objective(r_hi) < objective(r_lo), r_hi, r_lo)
        take_root = objective(best) < obj0 - PROX_TIE_GAP
        out = np.where(take_root, np.sign(v) * best, 0.0)
        return out[0] if scalar else out


def penalty_value(penalty: DCPenalty, x_block, lam: float,
                  flops: FlopCounter | None = None) -> float:
    """lam * sum of h over the block's coordinates."""
    x_block = np.asarray(x_block, dtype=np.float64)
    value = lam * float(np.sum(penalty.value(x_block)))
    if flops is not None:
        flops.charge("cost", x_block.size)
    return value


def prox(penalty: DCPenalty, v, c: float,
         flops: FlopCounter | None = None) -> np.ndarray:
    """Coordinate-wise prox of c * h applied to v, with c > 0."""
    if not c > 0:
        raise ValueError(f"prox scale must be positive, got {c}")
    out = penalty.prox(v, c)
    if flops is not None:
        flops.charge("prox", prox_charge(np.size(v)))
    return out


def coordinate_violation(penalty: DCPenalty, t, grad_coord, lam: float):
    """Stationarity gap of one coordinate (vectorized over inputs).

    Distance from ``lam * h2'(t) - grad`` to the interval ``lam * subdiff_h1(t)``;
    zero iff some subgradient choice satisfies grad + lam v - lam u = 0.
    """
    t = np.asarray(t, dtype=np.float64)
    grad_coord = np.asarray(grad_coord, dtype=np.float64)
    lo, hi = penalty.convex_subdiff(t)
    target = lam * penalty.concave_grad(t) - grad_coord
    below = lam * lo - target
    above = target - lam * hi
    return np.maximum(np.maximum(below, above), 0.0)


def block_violation(penalty: DCPenalty, x_block, grad_block, lam: float) -> float:
    """Infinity norm of the coordinate violations over one block."""
    x_block = np.asarray(x_block, dtype=np.float64)
    grad_block = np.asarray(grad_block, dtype=np.float64)
    if x_block.shape != grad_block.shape:
        raise ValueError(
            f"block and gradient shapes differ: {x_block.shape} vs {grad_block.shape}"
        )
    return float(np.max(coordinate_violation(penalty, x_block, grad_block, lam)))
