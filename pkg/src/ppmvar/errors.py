"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class PPMError(Exception):
    exit_code = 1
    module = "ppmvar"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def record(self):
        return {"error": type(self).__name__, "module": self.module, "message": str(self)}


class DomainError(PPMError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UsageError(PPMError, ValueError):
    """Caller supplied inconsistent or insufficient inputs."""


class DataError(PPMError, ValueError):
    exit_code = 2


class NumericError(PPMError, ArithmeticError):
    exit_code = 3
