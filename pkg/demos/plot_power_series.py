"""
Power-series solutions of the compatibility system
==================================================

Axis data along the first coordinate determines all Taylor coefficients of
a solution.  The coefficient table is filled by a recurrence and the
resulting series agrees with the spectral field near the origin.
"""

import math

import numpy as np

from vesselkit import (AnalyticInitialData, GridSpec, SampledSignal, check_discrete_compat,
                       evaluate_field, evaluate_series, normalize, solve_discrete)
from vesselkit.fixtures import strict_tensor_vessel

# %%
# Normalize the vessel so that the first sigma is the identity.
v, pencil = normalize(strict_tensor_vessel(2, 2, 0))
w = np.array([1.0, 0.5j, -0.3, 0.2])

# %%
# Axis data: derivatives at 0 of a Gaussian times a fixed vector.
def gaussian_derivative(k):
    return 0.0 if k % 2 else (-1) ** (k // 2) * math.prod(range(k - 1, 0, -2))


D = 14
b = np.array([gaussian_derivative(k) * w for k in range(D + 1)])
sol = solve_discrete(pencil, AnalyticInitialData(b), D)
print(f"{len(sol.table)} coefficients, residual {check_discrete_compat(sol, pencil):.1e}")

# %%
# Compare with the field computed from the sampled axis signal.
grid = GridSpec(512, 16.0)
f = SampledSignal(grid, np.exp(-grid.nodes ** 2 / 2)[:, None] * w)
for t in ([0.1, 0.05], [0.0, 0.08]):
    series, _ = evaluate_series(sol, t)
    field = evaluate_field(pencil, f, np.array(t))
    print(t, f"difference {np.linalg.norm(series - field):.1e}")
