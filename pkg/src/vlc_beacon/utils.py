from re import compile
from typing import Sequence, Tuple

import numpy as np

from .errors import InvalidParametersError

BIT_STRING = compile(r"^[01]*$")
HEX_STRING = compile(r"^[0-9a-fA-F]*$")


def parse_bit_string(text: str) -> np.ndarray:
    """Convert an ASCII ``0``/``1`` string to a uint8 array

    Character 0 of the string becomes element 0 of the array
    """
    text = text.strip()
    if not BIT_STRING.match(text):
        raise InvalidParametersError(f"'{text}' is not a string of 0 and 1")
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


def format_bit_string(bits: np.ndarray) -> str:
    return (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def hex_to_bit_string(text: str) -> str:
    """Expand a hex string most-significant nibble first into ``0``/``1``"""
    text = text.strip()
    if text.lower().startswith("0x"):
        text = text[2:]
    if not HEX_STRING.match(text):
        raise InvalidParametersError(f"'{text}' is not a hex string")
    return "".join(format(int(digit, 16), "04b") for digit in text)


def bit_string_to_hex(text: str) -> str:
    if len(text) % 4:
        raise InvalidParametersError(
            f"A bit string of length {len(text)} has no exact hex form"
        )
    return "".join(
        format(int(text[i : i + 4], 2), "x") for i in range(0, len(text), 4)
    )


def linear_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares line through the points

    Returns
    -------
    (slope, intercept, r_squared)
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if len(xs) < 2:
        raise InvalidParametersError("A linear fit needs at least two points")
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = float(np.sum((ys - ys.mean()) ** 2))
    if total == 0.0:
        r_squared = 1.0
    else:
        r_squared = 1.0 - float(np.sum(residual**2)) / total
    return float(slope), float(intercept), r_squared
