"""Exception and warning types shared across the package."""


class DivprojError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DivprojError):
    """Inputs have incompatible or invalid shapes."""


class InsufficientDataError(DivprojError):
    """Not enough observations to carry out the requested fit."""


class DegenerateDataError(DivprojError):
    """Input data is degenerate (empty, non-numeric, zero-variance, ...)."""


class SingularGramError(DivprojError):
    """A gram matrix that must be inverted is singular beyond repair."""


class DegenerateWeightsWarning(UserWarning):
    """Weight matrix is zero, collinear or otherwise rank deficient."""


class NumericalWarning(UserWarning):
    """A numerical fallback was taken (pseudo-inverse, eigenvalue floor, ...)."""
