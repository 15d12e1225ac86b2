"""Single home for the rounding rule: round half away from zero.

Every place the pipeline rounds for display or quantization (window
rendering, CSV probabilities, percentage tables) goes through these
helpers so two implementations of the same schedule agree digit for
digit.
"""

from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction

import numpy as np


def round_half_away(x):
    """Round scalar or array to the nearest integer, ties away from zero."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x >= 0.0, np.floor(x + 0.5), np.ceil(x - 0.5))
    if out.ndim == 0:
        return float(out)
    return out


def format_fixed(value, decimals: int) -> str:
    """Format `value` with exactly `decimals` digits, ties away from zero.

    Goes through Decimal(repr(value)) so the decimal digits of the
    shortest float representation are what gets rounded, not binary
    artifacts.
    """
    q = Decimal(1).scaleb(-decimals)
    return str(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def format_ratio_percent(numer: int, denom: int, decimals: int = 2) -> str:
    """Percentage of an exact integer ratio, e.g. (246, 306) -> '80.39'."""
    if denom == 0:
        raise ZeroDivisionError("denominator is zero")
    q = Decimal(1).scaleb(-decimals)
    pct = Decimal(100 * numer) / Decimal(denom)
    return str(pct.quantize(q, rounding=ROUND_HALF_UP))


def ratio_percent_is_integer(numer: int, denom: int) -> bool:
    """True when 100*numer/denom is exactly an integer (e.g. 1500/1500)."""
    return (Fraction(100 * numer, denom)).denominator == 1
