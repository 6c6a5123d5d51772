"""Exception types raised across the package."""


class DecsprayError(Exception):
    pass


class ZeroInverse(DecsprayError, ZeroDivisionError):
    """Multiplicative inverse of zero requested."""


class InvalidField(DecsprayError, ValueError):
    pass


class InvalidParams(DecsprayError, ValueError):
    pass


class InvalidAlpha(InvalidParams):
    pass


class LengthMismatch(DecsprayError, ValueError):
    pass


class BadSelection(DecsprayError, ValueError):
    pass


class NotDetermined(DecsprayError, RuntimeError):
    """Randomized solver gave up without certifying singularity."""


class TooLarge(DecsprayError, ValueError):
    pass


class NoMatching(DecsprayError, ValueError):
    pass


class InvalidGrid(DecsprayError, ValueError):
    pass


class PacketFormatError(DecsprayError, ValueError):
    pass
