"""Exceptions raised by the vlc_beacon package

All errors derive from ``ValueError`` so callers that only guard against bad
input values keep working.
"""
from typing import Optional, Sequence


class VlcBeaconError(ValueError):
    pass


class InvalidParametersError(VlcBeaconError):
    """A value is out of range

    ``fields`` names the offending configuration fields, when known.
    """

    def __init__(self, message: str, fields: Sequence[str] = ()) -> None:
        super().__init__(message)
        self.fields = tuple(fields)


class InvalidAddressError(InvalidParametersError):
    def __init__(self, address: int, front_ends: int) -> None:
        super().__init__(
            f"Anchor address {address} outside of network with {front_ends} front-ends"
        )
        self.address = address
        self.front_ends = front_ends


class EmptyReportError(InvalidParametersError):
    pass


class LineCodeViolationError(VlcBeaconError):
    """A received symbol group is not a valid codeword of the line code

    Arguments
    ---------
    scheme: str
        Name of the line code that was violated
    index: int
        Index of the offending Manchester pair or 4B6B group
    """

    def __init__(self, scheme: str, index: int, symbol: str) -> None:
        super().__init__(
            f"{scheme} violation at group {index}: {symbol} is not a codeword"
        )
        self.scheme = scheme
        self.index = index
        self.symbol = symbol


class BackpressureError(VlcBeaconError):
    pass


class ConfigError(InvalidParametersError):
    def __init__(
        self, message: str, path: Optional[str] = None, line_number: Optional[int] = None
    ) -> None:
        location = ""
        if path is not None:
            location = f"{path}:"
        if line_number is not None:
            location += f"{line_number}:"
        super().__init__(f"{location} {message}" if location else message)
        self.path = path
        self.line_number = line_number
