"""Exception and warning classes raised across vesselkit."""


class VesselError(Exception):
    """Base class for all vesselkit errors."""


class NonCommuting(VesselError):
    """The operators of a tuple do not commute to tolerance."""


class NonDissipative(VesselError):
    """Some (A_j - A_j^*)/i has a negative eigenvalue beyond tolerance."""


class DimensionMismatch(VesselError):
    """Array shapes are inconsistent with each other."""


class SingularSigma(VesselError):
    """The pivot sigma(xi) is not invertible to tolerance."""


class SingularTransform(VesselError):
    """A coordinate change matrix is (numerically) singular."""


class NotInCone(VesselError):
    """sigma(xi) is not strictly positive definite."""


class PreconditionResidual(VesselError):
    """A precondition identity fails; ``condition`` names it."""

    def __init__(self, condition, residual, tolerance):
        self.condition = condition
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"{condition}: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")


class SingularShift(VesselError):
    """A + iI is numerically singular."""


class InsufficientInitialData(VesselError):
    """Not enough axis coefficients for the requested degree."""


class OutsideDomain(VesselError):
    """Evaluation point lies outside the certified convergence box."""


class NotVR(VesselError):
    """The vessel fails the VR conditions required by the dilation."""


class RetryExhausted(VesselError):
    """A randomized fixture generator failed too many times."""


class DegenerateEmbeddingWarning(UserWarning):
    """All operators are selfadjoint, so the signal space is empty."""


class AliasingRiskWarning(UserWarning):
    """A sampled signal carries spectral energy close to the Nyquist limit."""


class OffGridShiftWarning(UserWarning):
    """A shift is not a multiple of the grid step; quadrature path used."""


class ConeWarning(UserWarning):
    """Isometry asserted for a time outside Pos and -Pos."""
