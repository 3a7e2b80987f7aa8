"""Exceptions shared across the package."""


class PrecisionError(ArithmeticError):
    """A result would need digits beyond the stored precision window.

    Raised instead of silently truncating: callers that ask for a phase,
    a canonical ball center, or a membership decision that the available
    digits cannot determine must widen the precision of their inputs.
    """


class PrimeMismatchError(ValueError):
    """Operands live over different primes."""


class ToleranceError(RuntimeError):
    """A requested numerical tolerance could not be certified."""


class InfiniteMassError(ValueError):
    """The requested set touches the origin, where the jump measure has
    infinite total mass."""
