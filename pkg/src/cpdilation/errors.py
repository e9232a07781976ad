"""Exception hierarchy shared across the package."""


class CPDilationError(Exception):
    """Base class for every error raised by this package."""


class EmptyWord(CPDilationError, ValueError):
    pass


class NeighborRepeat(CPDilationError, ValueError):
    pass


class ParseError(CPDilationError, ValueError):
    pass


class ShapeMismatch(CPDilationError, ValueError):
    pass


class LengthMismatch(CPDilationError, ValueError):
    pass


class NotContractive(CPDilationError, ValueError):
    pass


class NotUnital(CPDilationError, ValueError):
    pass


class AsymmetryTooLarge(CPDilationError, ValueError):
    pass


class HeightZero(CPDilationError, ValueError):
    """Height reduction needs at least one generator of positive height."""


class OutOfTruncation(CPDilationError, ValueError):
    """A product of generators left the finite basis catalog."""


class GramClipTooLarge(CPDilationError, ArithmeticError):
    pass


class CornerDegenerate(CPDilationError, ArithmeticError):
    pass
