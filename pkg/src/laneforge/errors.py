"""Exception types raised across laneforge."""


class LaneForgeError(Exception):
    """Base class for every error this package raises on purpose."""


class ShapeMismatch(LaneForgeError, ValueError):
    pass


class NonFinite(LaneForgeError, ValueError):
    pass


class TooFewPoints(LaneForgeError, ValueError):
    pass


class DegenerateAnchor(LaneForgeError, ValueError):
    pass


class OutOfGrid(LaneForgeError, ValueError):
    pass


class NoOverlapSlices(LaneForgeError, ValueError):
    """Two lanes share no slice on which both are present."""


class EmptyLane(LaneForgeError, ValueError):
    pass


class EmptyProposals(LaneForgeError, ValueError):
    pass


class ParseError(LaneForgeError, ValueError):
    """Malformed annotation/prediction input.

    ``line`` and ``col`` are 1-based; ``col`` counts whitespace-separated
    tokens, not characters. Either may be None when not applicable.
    """

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", token {col}"
            where += ": "
        super().__init__(where + message)


class EncodingError(ParseError):
    pass


class OddTokenCount(ParseError):
    pass


class NonNumericToken(ParseError):
    pass


class MalformedJson(ParseError):
    pass


class MissingKey(ParseError):
    pass


class LengthMismatch(ParseError):
    pass


class TypeMismatch(ParseError):
    pass


class UnsupportedFormat(LaneForgeError, ValueError):
    pass
