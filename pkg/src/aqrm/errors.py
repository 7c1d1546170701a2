"""Exception types shared across the package."""


class InvalidParams(ValueError):
    pass


class NoSolution(ValueError):
    """Requested mean-field branch does not exist at these parameters."""


class BoundaryDivergence(ArithmeticError):
    """A fluctuation quantity diverges (denominator at a phase boundary)."""


class FitDegenerate(ValueError):
    pass


class DegenerateSteadyState(RuntimeError):
    """The Liouvillian kernel is not one-dimensional (to numerical precision)."""


class TruncationUnsafe(RuntimeError):
    """Too much population near the Fock cutoff."""


class DimensionMismatch(ValueError):
    pass
