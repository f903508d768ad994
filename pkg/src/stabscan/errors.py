"""Exception types shared across the package."""


class StabscanError(Exception):
    """Base class for package errors."""


class DegenerateInput(StabscanError):
    """Input vectors are numerically dependent and cannot be orthonormalized."""


class BadDimension(StabscanError):
    """A model dimension violates the divisibility rules of its scalar field."""


class DimensionMismatch(StabscanError):
    """Vector or frame dimensions do not match the model they are used with."""


class IncompleteFrame(StabscanError):
    """An operation that needs a full tangent-plus-normal basis got a partial frame."""


class CaseMismatch(StabscanError):
    """A classifier case was requested that the given space or frame does not fit."""


class BadClosure(StabscanError):
    """Geodesic speeds and length do not close up on both factors."""


class IncompleteSample(StabscanError):
    """A curve sample is missing the fields the requested operation needs."""


class ConfigError(StabscanError):
    """A run configuration is malformed."""
