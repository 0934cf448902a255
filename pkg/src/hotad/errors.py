"""Exception hierarchy shared by all hotad modules."""


class HotadError(Exception):
    """Base class for every error raised by hotad."""


class TapeError(HotadError):
    pass


class MalformedTapeError(TapeError):
    """A node references an operand that does not precede it."""


class ArityError(TapeError):
    """A node was given the wrong number of operands for its elemental."""


class UnknownElementalError(TapeError, KeyError):
    pass


class EvaluationError(HotadError, ArithmeticError):
    """An elemental was evaluated outside its domain.

    ``node`` is the 1-based tape index of the offending node.
    """

    def __init__(self, message: str, node: int | None = None, symbol: str | None = None):
        super().__init__(message)
        self.node = node
        self.symbol = symbol


class ShapeError(HotadError, ValueError):
    pass


class BoundsError(HotadError, IndexError):
    pass


class ResourceError(HotadError, MemoryError):
    """A dense computation would exceed the configured entry cap."""


class UnknownProblemError(HotadError, KeyError):
    pass


class ParameterError(HotadError, ValueError):
    pass


class OracleDomainError(HotadError, ArithmeticError):
    """A finite-difference probe left the domain of the function."""
