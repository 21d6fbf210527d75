"""Exception hierarchy shared by the library and the command line tool."""


class OperCalcError(Exception):
    """Base class for all library errors."""


class MalformedInputError(OperCalcError):
    """Input file or argument could not be parsed."""


class PreconditionError(OperCalcError):
    """An operation's mathematical precondition is violated."""


class NotAnOperError(PreconditionError):
    """Connection fails the transversality/unit conditions."""


class InsufficientTruncationError(OperCalcError):
    """A computation needs coefficients beyond the certified order."""


class IdentityCheckError(OperCalcError):
    """A requested identity check failed on certified coefficients."""
