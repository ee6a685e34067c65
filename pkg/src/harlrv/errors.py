"""Exceptions shared across the package."""


class DegenerateError(ValueError):
    """A variance, weight or design is degenerate (zero, nonpositive or singular)."""
