"""
Error types raised across the bilexical toolkit.

Every error derives from BilexicalError so the CLI can report any of them
the same way. Errors about bad arguments or malformed input also derive
from ValueError.
"""


class BilexicalError(Exception):
    """Base class for all toolkit errors"""


class DataWarning(UserWarning):
    """Non-fatal data problem (truncated dimensions, no matching edges, ...)"""


class InvalidArgument(BilexicalError, ValueError):
    pass


class DimensionError(BilexicalError, ValueError):
    pass


class NumericError(BilexicalError, ArithmeticError):
    pass


class InvalidRank(BilexicalError, ValueError):
    pass


class FormatError(BilexicalError, ValueError):
    """
    Malformed input file.

    Args:
        message (str): What went wrong
        line (int): 1-based line number of the offending row, if known
    """
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCorpus(BilexicalError, ValueError):
    pass


class EmptyData(BilexicalError, ValueError):
    pass


class InsufficientData(BilexicalError, ValueError):
    pass


class EmptyCandidates(BilexicalError, ValueError):
    pass


class EmptySplit(BilexicalError, ValueError):
    pass


class RequiresFactorized(BilexicalError, TypeError):
    pass


class DataError(BilexicalError, ValueError):
    pass


class UnknownWord(BilexicalError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown word"


class DegenerateVector(BilexicalError, ValueError):
    pass


class DivergenceError(BilexicalError, ArithmeticError):
    """
    Training objective blew up.

    Args:
        epoch (int): Epoch in which divergence was detected
        step_size (float): Step size in use at that point
    """
    def __init__(self, epoch, step_size, value=None):
        self.epoch = epoch
        self.step_size = step_size
        self.value = value
        super().__init__(
            f"training diverged at epoch {epoch} (step size {step_size:.6g}, nll={value})"
        )


class VersionError(BilexicalError):
    pass


class RepresentationMismatch(BilexicalError):
    pass
