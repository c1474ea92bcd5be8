"""Exception hierarchy shared by the engines and the command line.

Each class carries the exit code the CLI maps it to.
"""


class SparseConvError(Exception):
    exit_code = 5


class ParseError(SparseConvError):
    """Malformed vector file or command-line value."""

    exit_code = 2


class GuardError(SparseConvError):
    """A configured size guard would be exceeded; the work is refused."""

    exit_code = 3


class ContractError(SparseConvError):
    """A caller broke a documented precondition (e.g. negative input)."""

    exit_code = 4


class InvariantError(SparseConvError):
    """An internal invariant failed. Indicates a bug, never bad input."""

    exit_code = 5
