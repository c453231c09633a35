"""Exception hierarchy shared by all hjblab modules."""


class HJBLabError(Exception):
    """Base class for every error raised by hjblab."""


class DomainError(HJBLabError, ValueError):
    """Argument outside the domain of a catalog function."""


class ExtendedArithmeticError(HJBLabError, ArithmeticError):
    """Undefined extended-real operation such as +inf + -inf."""


class NotInvertible(HJBLabError):
    """Marginal utility cannot be inverted at the requested value."""

    def __init__(self, p, value_range, message=None):
        self.p = p
        self.range = value_range
        super().__init__(message or f"u' is not invertible at p={p}; range of u' is {value_range}")


class ConditionFailed(HJBLabError):
    """A structural condition on the model (e.g. a steady-state bracket) fails."""

    def __init__(self, condition, detail=""):
        self.condition = condition
        self.detail = detail
        super().__init__(f"{condition}: {detail}" if detail else condition)


class NotIsolated(ConditionFailed):
    """rho lies in the subdifferential of f on a nondegenerate interval."""

    def __init__(self, interval):
        self.interval = interval
        super().__init__("NotIsolated", f"rho in subdifferential of f on {interval}")


class SolveFailed(HJBLabError):
    def __init__(self, last_k, detail=""):
        self.last_k = last_k
        super().__init__(f"solve failed after k={last_k}: {detail}")


class KinkDerivativeError(HJBLabError):
    """Derivative requested at a kink of a non-smooth candidate."""


class NotConcaveHere(HJBLabError):
    def __init__(self, k, detail=""):
        self.k = k
        super().__init__(f"candidate is not concave near k={k} {detail}".rstrip())


class PolicyUndefined(HJBLabError):
    """Feedback control (u')^-1(V'(k)) is degenerate along the path."""


class MinusInfinitePayoff(HJBLabError):
    pass


class ConfigError(HJBLabError):
    pass


class ParseError(HJBLabError, ValueError):
    """Malformed model document or candidate descriptor; ``path`` names the field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
