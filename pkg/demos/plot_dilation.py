"""
A discretized unitary dilation
==============================

For a pair of commuting dissipative matrices the dilation acts on state
plus past output plus future input.  Compressing it back to the state
space recovers the contraction semigroup, and on smooth vectors it is
isometric and satisfies the group law.
"""

import numpy as np

from vesselkit import DilationOperatorConfig, GridSpec, dilation_check
from vesselkit.dilation import (bump_vector, commutativity_residual, group_law_residual,
                                isometry_residual, smooth_state_vector)
from vesselkit.fixtures import strict_tensor_vessel

# %%
# The periodic grid must hold the signals that the times below move around.
cfg = DilationOperatorConfig.build(strict_tensor_vessel(2, 2, 0), GridSpec(1024, 40.0))

# %%
# Compression error for a few times in the cone.
rep = dilation_check(cfg, [[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]], refine=False)
print("compression errors:", ["%.1e" % e for e in rep["errors"]])

# %%
# A smooth test vector: a state with a decaying signal tail, plus two bumps.
rng = np.random.default_rng(0)
vec = smooth_state_vector(cfg, rng.normal(size=4) + 0j)
vec = vec + bump_vector(cfg, [(6.0, rng.normal(size=4)), (-7.0, 1j * rng.normal(size=4))])
t, s = np.array([0.5, 0.5]), np.array([0.5, 1.0])
print(f"isometry at t:      {isometry_residual(cfg, t, vec):.1e}")
print(f"isometry at -t:     {isometry_residual(cfg, -t, vec):.1e}")
print(f"group law:          {group_law_residual(cfg, t, s, vec):.1e}")
print(f"commutativity:      {commutativity_residual(cfg, t, s, vec):.1e}")
