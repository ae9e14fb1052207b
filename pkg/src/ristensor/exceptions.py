"""Exception types shared across the package."""


class IdentifiabilityError(ValueError):
    """Problem dimensions violate the uniqueness conditions of the fit."""


class DivergenceError(ArithmeticError):
    """An iterative solve produced non-finite values."""


class EmptyCellError(RuntimeError):
    """Every trial of a Monte-Carlo cell failed; no statistic can be formed."""
