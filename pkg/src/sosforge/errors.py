"""Exception and warning types raised by sosforge."""


class SosforgeError(Exception):
    """Base class for all library errors."""


class DimensionError(SosforgeError, ValueError):
    """Operand shapes do not conform."""


class ArgumentError(SosforgeError, ValueError):
    """An argument is malformed (bad permutation, missing variable value, ...)."""


class NonlinearityError(SosforgeError, ValueError):
    """The operation would make a decision variable appear non-affinely."""


class RegistrationError(SosforgeError, ValueError):
    """A decision variable is unknown to, or already registered in, a program."""


class OptionError(SosforgeError, ValueError):
    """An option is incompatible with the requested structure."""


class CapacityError(SosforgeError, ValueError):
    """The problem is too large for the embedded dense solver."""


class SdpaFormatError(SosforgeError, ValueError):
    """Malformed SDPA sparse input."""


class ParseError(SosforgeError, ValueError):
    """Syntax error in a polynomial expression.

    ``offset`` is the byte offset of the offending character.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class StructuralInfeasibilityWarning(UserWarning):
    """An SOS constraint can never be satisfied (e.g. odd top degree)."""
