"""Number formatting shared by diagnoses, narratives, and Q&A answers.

Narrative text may only contain numerals that also appear in the structured
payloads, so every value shown to the user is formatted once here and the
same display string is stored in the payload and spliced into the text.
"""

from __future__ import annotations

import math


def fmt_num(value: float, decimals: int = 2) -> str:
    """Fixed decimals, then trailing zeros (and a bare point) stripped."""
    text = f"{value:.{decimals}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text if text not in ("-0", "") else "0"


def fmt_pct(fraction: float, decimals: int = 2) -> str:
    """0.9375 -> '93.75'; the caller appends the percent sign."""
    return fmt_num(fraction * 100.0, decimals)


def fmt_pct_round(fraction: float) -> str:
    """Nearest whole percent (half away from zero), e.g. 0.2459 -> '25'."""
    return str(int(math.floor(fraction * 100.0 + 0.5)))


def fmt_seconds(value: float) -> str:
    return fmt_num(value, 1)
