"""Exception types shared by all modules."""


class FreeProbError(Exception):
    """Base class for all errors raised by the package."""


class InvalidInputError(FreeProbError, ValueError):
    """Malformed or out-of-contract input."""


class ResourceLimitError(FreeProbError, RuntimeError):
    """A computation would exceed a configured size cap or a functional's order."""


class DomainError(FreeProbError, ValueError):
    """An analytic evaluation requested outside its domain."""


class NotInvertibleError(FreeProbError, ValueError):
    """A series or transform that has no inverse (for example c1 = 0)."""


class TracialityError(FreeProbError, ValueError):
    """A functional declared tracial gave different values on cyclic rotations."""
