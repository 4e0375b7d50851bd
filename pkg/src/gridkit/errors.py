"""Exception types raised by gridkit."""


class GridkitError(Exception):
    """Base class for all gridkit errors."""


class InvalidArgument(GridkitError, ValueError):
    pass


class NumericalError(GridkitError):
    """A computation could not produce a meaningful result."""

    operation = "numerical"


class DegeneratePsf(NumericalError):
    operation = "compute_r_prime"


class ZeroDenominator(NumericalError):
    operation = "fixed_point_weights"

    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"sample {index} sees no kernel mass")


class DegenerateGeometry(NumericalError):
    operation = "voronoi_weights"


class MemoryBudgetExceeded(GridkitError, MemoryError):
    operation = "build_gradient_operator"
