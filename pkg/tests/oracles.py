"""Independent reference computations shared by the tests.

The prox oracle minimizes the scalar objective 0.5 (t - v)^2 + c h(t) by a
dense grid over [0, |v|] followed by bounded local refinement of every
grid basin, never through the closed forms it is checking.
"""

import numpy as np
from scipy.optimize import minimize_scalar


def prox_brute_force(penalty, v, c, grid_points=4096):
    """Global scalar prox by grid search plus local refinement."""
    a = abs(float(v))
    if a == 0.0:
        return 0.0

    def objective(t):
        return 0.5 * (t - a) ** 2 + c * float(penalty.value(np.float64(t)))

    grid = np.linspace(0.0, a, grid_points)
    values = 0.5 * (grid - a) ** 2 + c * np.asarray(penalty.value(grid))

    candidates = [0.0, a]
    # refine every interior basin of the grid profile
    interior = np.where((values[1:-1] <= values[:-2])
                        & (values[1:-1] <= values[2:]))[0] + 1
    for k in interior:
        lo, hi = grid[k - 1], grid[k + 1]
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13, "maxiter": 500})
        candidates.append(float(res.x))

    best = min(candidates, key=objective)
    # ties within 1e-12 prefer the sparse answer
    if objective(0.0) <= objective(best) + 1e-12:
        best = 0.0
    return float(np.sign(v)) * best
