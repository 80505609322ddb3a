"""Exception hierarchy shared by every sfda-lab module."""


class LabError(Exception):
    """Base class for all sfda-lab errors."""


class UsageError(LabError, ValueError):
    """Raised when an operation is called with arguments outside its contract."""


class ConfigurationError(LabError, ValueError):
    """Raised when a configuration document or run setup is invalid."""


class NumericError(LabError, ArithmeticError):
    """Raised when inputs or intermediate values are not finite."""


class DegenerateInputError(NumericError):
    """Raised when a quantity is undefined for the given input (e.g. zero norm)."""


class DatasetParseError(LabError, ValueError):
    """Raised when a dataset file cannot be parsed.

    Attributes:
        line: 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
