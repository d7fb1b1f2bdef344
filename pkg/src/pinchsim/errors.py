"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


class UnreachableFractionError(ValidationError):
    """A coupler was asked to extract more than its maximum efficiency allows."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class SingularityError(ValueError):
    """A pinching antenna coincides with the receiver (zero distance)."""


class ApertureError(ValidationError):
    """An antenna arrangement does not fit on the waveguide."""
