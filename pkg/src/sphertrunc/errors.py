"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An input violates a documented precondition (bad spectrum, bad bound,
    unsupported order, ...).  Maps to CLI exit code 1."""


class UnsupportedConfigError(DomainError):
    """A structurally valid request that the implementation deliberately does
    not cover (e.g. third/fourth-order solves with an uncentered first-order
    correction)."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach its target accuracy (series cap
    hit, iteration budget exhausted, ...).  Maps to CLI exit code 2.

    Diagnostic context, when available, is attached as attributes by the
    raising site (e.g. ``trace`` on the fixed-point solver).
    """


class IllConditionedWarning(UserWarning):
    """Result computed but close to a conditioning cliff; treat with care."""
