"""Exception types shared by all modules."""


class SkewdimError(Exception):
    """Base class."""


class InputError(SkewdimError, ValueError):
    """Malformed input: unknown symbol, inadmissible word, bad config field."""


class Inconclusive(SkewdimError):
    """A bounded search or estimate could not settle the question.

    Absence of a witness within the search bound is not a disproof.
    """

    def __init__(self, message, missing=None, partial=None):
        super().__init__(message)
        self.missing = missing
        self.partial = partial


class TruncationError(SkewdimError):
    """A resource cap was hit; ``partial`` carries what was computed."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SymmetryViolation(SkewdimError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GeometryError(SkewdimError, ValueError):
    pass
