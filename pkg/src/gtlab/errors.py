"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class CapacityError(RuntimeError):
    """A requested computation exceeds an enumeration cap or budget."""
