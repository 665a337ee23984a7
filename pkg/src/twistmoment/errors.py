"""Exception types shared across the package."""


class IdentityViolation(ArithmeticError):
    """An exact identity that must hold failed numerically.

    This always indicates a bug or corrupted input, never a tolerance issue
    the caller should hide.
    """

    def __init__(self, name, detail=""):
        self.name = name
        self.detail = detail
        super().__init__(f"{name}: {detail}" if detail else name)


class ParameterError(ValueError):
    """Parameters violate a documented precondition.

    ``failures`` lists every violated constraint, not just the first one.
    """

    def __init__(self, failures):
        if isinstance(failures, str):
            failures = [failures]
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class InsufficientDataError(ValueError):
    """Coefficient data does not reach the index range a computation needs."""

    def __init__(self, needed, available, what="coefficients"):
        self.needed = needed
        self.available = available
        super().__init__(f"need {what} up to n={needed}, have n<={available}")


class InconclusiveError(RuntimeError):
    """A numerical check could not reach its tolerance budget.

    Distinct from a failure: the quantity was not shown to be wrong.
    """


class FormValidationError(ValueError):
    """A coefficient file failed a load-time invariant."""

    def __init__(self, check, message, location=None):
        self.check = check
        self.location = location
        where = f" at {location}" if location is not None else ""
        super().__init__(f"[{check}]{where} {message}")
