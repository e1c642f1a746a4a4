"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


class RangeError(OverflowError):
    """A result cannot be represented in double precision."""
