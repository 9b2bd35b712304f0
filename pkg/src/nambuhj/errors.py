"""Exception hierarchy shared by every module."""


class NambuError(Exception):
    """Base class for all library errors."""


class ExprSyntaxError(NambuError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class DomainError(NambuError, ArithmeticError):
    """Evaluation left the set where a field is defined."""

    def __init__(self, message: str, subexpression: str = ""):
        self.subexpression = subexpression
        if subexpression:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


class DomainExitError(NambuError):
    """An integrator stage left the domain predicate."""

    def __init__(self, message: str, last_valid_time: float):
        self.last_valid_time = last_valid_time
        super().__init__(f"{message} (last valid time {last_valid_time!r})")


class StepUnderflowError(NambuError):
    pass


class DegenerateError(NambuError):
    """Raised when an estimate has nothing to measure (e.g. zero error)."""


class StationaryPointError(NambuError):
    pass


class ConfigError(NambuError):
    pass
