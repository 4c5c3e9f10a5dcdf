"""Exception types raised across descentlab."""


class DescentLabError(Exception):
    pass


class DimensionMismatch(DescentLabError, ValueError):
    pass


class NonFiniteValue(DescentLabError, FloatingPointError):
    pass


# data
class DataFileError(DescentLabError):
    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{self.path}: {message}")


class BadMagic(DataFileError):
    pass


class CountMismatch(DataFileError):
    pass


class TruncatedFile(DataFileError):
    pass


class NotEnoughRows(DescentLabError, ValueError):
    pass


# solver / oracle
class SingularSystem(DescentLabError, ArithmeticError):
    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


class Infeasible(DescentLabError, ValueError):
    pass


class DidNotConverge(DescentLabError, RuntimeError):
    """Raised by iterative oracles; ``iterate`` holds the best point found."""

    def __init__(self, message, iterate=None, grad_norm=None):
        self.iterate = iterate
        self.grad_norm = grad_norm
        super().__init__(message)


# mlp
class ShrinkNotAllowed(DescentLabError, ValueError):
    pass


# sweep / cli
class EmptyInput(DescentLabError, ValueError):
    pass


class SchemaMismatch(DescentLabError, ValueError):
    pass


class ConfigError(DescentLabError, ValueError):
    pass
