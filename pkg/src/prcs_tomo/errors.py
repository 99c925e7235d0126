"""Exception hierarchy. CLI exit codes are attached to the base classes."""


class PrcsError(Exception):
    exit_code = 1


class DomainError(PrcsError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(PrcsError, ValueError):
    """Inconsistent configuration, metadata, or inputs."""


class AlignmentError(ValidationError):
    """Densities that must share an x grid do not."""


class NumericError(PrcsError, ArithmeticError):
    exit_code = 2


class IllConditionedError(NumericError):
    """Mean photon numbers too close for a stable decoy inversion."""


class FitError(NumericError):
    """Mean photon number fit did not converge."""


class DegenerateInputError(NumericError):
    """Input carries no usable spread (e.g. zero vacuum variance)."""


class ParseError(PrcsError, ValueError):
    exit_code = 3

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class SubVacuumWarning(UserWarning):
    """Calibrated variance is significantly below the vacuum level."""
