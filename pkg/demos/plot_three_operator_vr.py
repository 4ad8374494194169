"""
VR conditions with three operators
==================================

With three operators the VR identities are no longer automatic.  A
tensor-product triple satisfies them, a Jordan-type triple does not, and
the verdict is the same for the input family, the output family and a
different pivot direction.
"""

from vesselkit import check_vr, check_vr_star, make_strict_vessel
from vesselkit.fixtures import jordan_fixture, strict_tensor_vessel

# %%
# Build one vessel of each kind.
cases = {
    "tensor triple": strict_tensor_vessel(3, 2, seed=0),
    "jordan triple": make_strict_vessel(jordan_fixture(3, 3, seed=0)),
}

# %%
# Compare the three verdicts.
for name, v in cases.items():
    verdicts = [check_vr(v, 0).passed, check_vr_star(v).passed, check_vr(v, 1).passed]
    worst = check_vr(v, 0).max_residual()
    print(f"{name:14s} VR/VR*/VR(e2) = {verdicts}  worst residual {worst:.1e}")
