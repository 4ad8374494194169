"""
Energy balance along a line in the future cone
==============================================

The state is driven along a line by a Gaussian input.  The change in state
norm equals input energy minus output energy, and the discrete residual
shrinks at second order as the grid is refined.
"""

import numpy as np

from vesselkit import (GridSpec, SampledSignal, energy_balance_residual, pos_cone_margin,
                       propagate_state)
from vesselkit.fixtures import strict_tensor_vessel

# %%
# A direction with positive definite sigma.
v = strict_tensor_vessel(2, 2, 0)
xi = np.array([1.0, 0.4])
print(f"cone margin of xi: {pos_cone_margin(v, xi):.3f}")

# %%
# Refine the grid and watch the residual.
h = np.array([1.0, 0.5j, -0.2, 0.1])
w = np.array([1.0, -0.5, 0.3j, 0.2])
prev = None
for N in (256, 512, 1024):
    g = GridSpec(N, 0.5)
    u = SampledSignal(g, np.exp(-(g.nodes / 0.1) ** 2 / 2)[:, None] * w)
    res = energy_balance_residual(propagate_state(v, h, u, xi), v)
    rate = "" if prev is None else f"  order {np.log2(prev / res):.2f}"
    print(f"N={N:5d} residual {res:.2e}{rate}")
    prev = res
