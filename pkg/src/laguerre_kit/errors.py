"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(ValueError):
    """Inconsistent or malformed request (shapes, missing data, bad config)."""


class UnsupportedClaimError(RuntimeError):
    """The requested statement is not established for these parameters."""
