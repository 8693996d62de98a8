"""Exception types shared across the toolkit."""


class LatfoldError(Exception):
    """Base class; the CLI maps these to exit code 2."""


class ParseError(LatfoldError, ValueError):
    pass


class MissingVariable(LatfoldError, KeyError):
    def __init__(self, index: int):
        super().__init__(index)
        self.index = index

    def __str__(self) -> str:
        return f"variable {self.index} is not assigned"


class WidthMismatch(LatfoldError, ValueError):
    pass


class InvalidTurn(LatfoldError, ValueError):
    pass


class InvalidFold(LatfoldError, ValueError):
    pass


class TooLarge(LatfoldError, ValueError):
    pass


class IndexOutOfRange(LatfoldError, IndexError):
    pass


class SequenceTooShort(LatfoldError, ValueError):
    pass


class NoSlackRegister(LatfoldError, ValueError):
    pass


class MissingPair(LatfoldError, ValueError):
    pass


class AsymmetricEntry(LatfoldError, ValueError):
    pass


class UnknownResidueCode(LatfoldError, ValueError):
    pass


class CapExceeded(LatfoldError, ValueError):
    pass


class NotQuadratic(LatfoldError, ValueError):
    pass


class DegenerateProbability(LatfoldError, ValueError):
    pass
