"""Exception types shared across the package."""

from __future__ import annotations


class TsadError(Exception):
    """Base class for all package errors."""


class MissingFile(TsadError):
    pass


class MalformedRow(TsadError):
    """A data row that could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        msg = f"malformed row at line {line_no}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class EmptySeries(TsadError):
    pass


class ShapeMismatch(TsadError):
    pass


# Network/layer-level shape complaints share the same class.
ShapeError = ShapeMismatch


class InvalidArgs(TsadError):
    pass


class OutOfRange(TsadError):
    pass


class EpisodeFinished(TsadError):
    pass


class NonFiniteLoss(TsadError):
    pass


class NonFiniteOutput(TsadError):
    pass


class InvalidSigma(TsadError):
    pass


class NetworkError(TsadError):
    pass


class OracleTimeout(TsadError):
    pass


class LengthMismatch(TsadError):
    pass


class ConfigError(TsadError):
    pass
