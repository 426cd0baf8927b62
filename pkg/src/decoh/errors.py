"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A run configuration or constructor argument is invalid."""


class StabilityError(RuntimeError):
    """The split-operator stability guard was violated.

    Carries the offending |tau| * max|U| product so callers can report it.
    """

    def __init__(self, product, limit):
        self.product = float(product)
        self.limit = float(limit)
        super().__init__(
            f"stability guard violated: |tau|*max|U| = {self.product:.6g} "
            f"exceeds {self.limit:.6g}"
        )


class NumericalError(RuntimeError):
    """A runtime numerical invariant was violated."""


class DegenerateFitError(RuntimeError):
    """Too few usable points above the floor for a log-log slope fit."""


class InsufficientSamplesError(RuntimeError):
    """Fewer retained samples than the sampler's minimum."""
