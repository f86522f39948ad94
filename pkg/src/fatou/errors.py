"""Exception hierarchy shared by the library and the CLI."""


class FatouError(Exception):
    """Base class for all library errors."""

    #: process exit code used by the CLI when this error escapes a subcommand
    exit_code = 3


class ParseError(FatouError, ValueError):
    exit_code = 2

    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        super().__init__(message)

    def annotated(self):
        """Message with a caret under the offending column."""
        if not self.text:
            return str(self)
        return f"{self}\n  {self.text}\n  {' ' * self.position}^"


class ConstantMapError(FatouError, ValueError):
    exit_code = 2


class DegenerateMobiusError(FatouError, ValueError):
    exit_code = 2


class RootFindingError(FatouError, ArithmeticError):
    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class DegreeCapError(FatouError):
    exit_code = 4


class PreconditionError(FatouError, ValueError):
    exit_code = 5


class NotFixedError(PreconditionError):
    pass


class ExceptionalSeedError(PreconditionError):
    def __init__(self, message, exceptional=()):
        self.exceptional = tuple(exceptional)
        super().__init__(message)


class ConvergenceError(FatouError, ArithmeticError):
    def __init__(self, message, history=()):
        self.history = list(history)
        super().__init__(message)


class SupportError(PreconditionError):
    """A grid field is not compactly supported inside its window."""


class FormatError(FatouError, ValueError):
    """Malformed binary field file."""

    exit_code = 2
