"""
Small helpers shared by the modules and the commands: weight parsing, rendering of
rationals and infinities for JSON/CSV output, and the worker count taken from
ANARCHIA_THREADS.
"""

import logging
import math
import os
from fractions import Fraction
from typing import Union

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


def parse_weight(raw) -> Fraction:
    """
    Parse a weight given as int, decimal string, or "num/den" string into an exact
    Fraction. Decimal strings are read exactly ("0.1" is 1/10, not the binary float).
    """
    if isinstance(raw, Fraction):
        value = raw
    elif isinstance(raw, bool):
        raise ValueError(f"Invalid weight: {raw!r}")
    elif isinstance(raw, int):
        value = Fraction(raw)
    elif isinstance(raw, float):
        value = Fraction(str(raw))
    elif isinstance(raw, str):
        try:
            value = Fraction(raw.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"Invalid weight: {raw!r}")
    else:
        raise ValueError(f"Invalid weight: {raw!r}")
    if value <= 0:
        raise ValueError(f"Weight must be positive, got {raw!r}")
    return value


def render_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def render_real(value) -> Union[float, str, None]:
    """JSON-safe float: infinities become "inf", None stays None."""
    if value is None:
        return None
    if isinstance(value, Fraction):
        return render_rational(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return float(value)


def format_csv_real(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return render_rational(value)
    if math.isinf(value):
        return "inf"
    return repr(float(value))


def safe_exp(log_value: float) -> float:
    """exp that saturates to +inf instead of raising OverflowError"""
    if log_value > 709.0:
        return math.inf
    return math.exp(log_value)


def worker_count() -> int:
    raw = os.getenv("ANARCHIA_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        logger.warning(f"Ignoring invalid ANARCHIA_THREADS={raw!r}, using 1 worker")
        return 1
    return max(1, workers)
