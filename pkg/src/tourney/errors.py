"""Exception hierarchy shared by every tourney module."""


class TourneyError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(TourneyError, ValueError):
    pass


class InvalidSize(InvalidInput):
    pass


class InvalidEdge(InvalidInput):
    pass


class ContradictoryEdge(InvalidEdge):
    """Both orientations of a pair were reported."""

    def __init__(self, winner, loser):
        super().__init__(f"edge ({winner}, {loser}) contradicts existing ({loser}, {winner})")
        self.winner = winner
        self.loser = loser


class InvalidTournament(InvalidInput):
    pass


class FormatError(InvalidInput):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidRequest(InvalidInput):
    pass


class InvalidTrace(InvalidInput):
    pass


class OracleError(TourneyError):
    pass


class QueryTooLarge(OracleError, ValueError):
    pass


class QueryTooSmall(OracleError, ValueError):
    pass


class ProtocolError(OracleError):
    pass


class OracleTimeout(OracleError):
    pass


class ReplayMiss(OracleError, KeyError):
    pass


class StalledOracle(OracleError):
    pass


class NotTransitive(TourneyError):
    pass
