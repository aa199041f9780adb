"""Exception hierarchy shared by all sontagkit modules."""


class SontagKitError(Exception):
    """Base class for all errors raised by sontagkit."""


class ExpressionError(SontagKitError, ValueError):
    """Problem parsing or evaluating an expression."""


class ExprSyntaxError(ExpressionError):
    """Malformed expression text.

    Attributes:
        position: 0-based character offset at which parsing failed.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name, position):
        super().__init__(f"unknown identifier {name!r} at position {position}")
        self.name = name
        self.position = position


class DimensionError(SontagKitError, ValueError):
    """Variable index or vector length inconsistent with the declared dimension."""


class NonFiniteError(ExpressionError, ArithmeticError):
    """Evaluation produced inf/nan or hit a pole or domain error."""


class ModelError(SontagKitError, ValueError):
    """Invalid system, CLF candidate, or weight definition."""


class WeightsError(ModelError):
    """Weight matrix is not symmetric positive definite."""


class ClfViolationError(SontagKitError):
    """The CLF condition fails at a state: b(x) ~ 0 while a(x) >= 0.

    Attributes:
        x: the offending state.
        a: drift term of V-dot.
        beta: b^T R^-1 b at the state.
    """

    def __init__(self, x, a, beta):
        super().__init__(
            f"CLF condition violated at x={list(map(float, x))}: a={a:.6g}, beta={beta:.6g}"
        )
        self.x = x
        self.a = a
        self.beta = beta


class CareError(SontagKitError):
    """Riccati solver failure (no stabilizing gain, divergence, singular system)."""


class SimulationError(SontagKitError):
    """Integrator failure that cannot be expressed as a termination status."""


class CatalogError(SontagKitError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConfigError(SontagKitError):
    """Experiment configuration failed schema, dimension or definiteness checks.

    Attributes:
        path: dotted location of the offending field, when known.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
