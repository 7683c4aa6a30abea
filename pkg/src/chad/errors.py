"""Exception hierarchy.

``ChadError`` subclasses are user-facing failures (bad programs, bad inputs);
``InternalError`` marks a broken invariant inside the pipeline.
"""


class ChadError(Exception):
    """Base class for errors caused by the user's program or inputs."""


class InternalError(Exception):
    """An invariant of the implementation was violated."""


class ParseError(ChadError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class UnboundVar(ChadError):
    pass


class UnboundTypeVar(ChadError):
    pass


class OpenFunctionType(ChadError):
    pass


class IllKinded(ChadError):
    pass


class TypeMismatch(ChadError):
    def __init__(self, expected, found, location=None, note=""):
        self.expected = expected
        self.found = found
        self.location = location
        where = f" at {location[0]}:{location[1]}" if location else ""
        extra = f" ({note})" if note else ""
        super().__init__(f"type mismatch{where}: expected {expected}, found {found}{extra}")


class ArityMismatch(ChadError):
    pass


class NonExhaustiveMatch(ChadError):
    pass


class LinearVarMisuse(ChadError):
    pass


class NotLinearType(ChadError):
    pass


class MismatchedBranch(ChadError):
    """Adding or projecting lifted-sum values that live in different branches."""


class MissingPrimitiveDerivative(ChadError):
    pass


class UnknownOp(ChadError):
    pass


class NotADataType(ChadError):
    pass


class ShapeMismatch(ChadError):
    pass


class ComponentCrossed(ChadError):
    """A finite-difference probe left the coproduct component of the base point."""
