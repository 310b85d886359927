"""
Use a base class to define a common interface for latency functions.

Every family evaluates in two ways: directly (eval, saturating to +inf) and in the
log domain (log_eval, which never overflows for x <= 1e6). All bound computations
elsewhere in the package only ever touch the log domain.
"""

import enum
import logging
import math
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from anarchia.constants import (
    MAX_DIRECT_LOG,
    MONOTONE_GRID_POINTS,
    MONOTONE_GRID_RANGE,
)
from anarchia.errors import InvalidLatency, LatencyDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


class LatencyClass(enum.Enum):
    """Growth class, assigned per family at construction and never inferred."""

    L1 = "L1"  # superpolynomial, lim l(x+i)/l(x) > 1
    L2 = "L2"  # superpolynomial, lim l(x+i)/l(x) = 1
    L3 = "L3"  # bounded above by a polynomial


# Base class for all latency families
class LatencyFunction:
    """Base interface for latency functions."""

    family_id: str = ""
    class_tag: LatencyClass = LatencyClass.L3

    def __init__(self, params: Tuple):
        self.params = params

    # Subclasses implement these two on float arrays with x > 0
    def _log_eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _eval(self, x: np.ndarray) -> np.ndarray:
        log_values = self._log_eval(x)
        with np.errstate(over="ignore"):
            return np.where(log_values > MAX_DIRECT_LOG, np.inf, np.exp(log_values))

    def exact_eval(self, x: Fraction) -> Optional[Fraction]:
        """Exact rational value when the family allows it, else None."""
        return None

    def eval(self, x: ArrayLike):
        """l(x), saturating to +inf when the value is not representable."""
        arr, scalar = _as_domain_array(x)
        out = self._eval(arr)
        return float(out) if scalar else out

    def log_eval(self, x: ArrayLike):
        """ln l(x), computed analytically per family."""
        arr, scalar = _as_domain_array(x)
        out = self._log_eval(arr)
        return float(out) if scalar else out

    def log_ratio(self, x: ArrayLike, y: ArrayLike):
        """ln(l(x)/l(y))"""
        return np.subtract(self.log_eval(x), self.log_eval(y))

    def to_spec(self) -> dict:
        return {"family": self.family_id, "params": _listify(self.params)}

    def key(self) -> Tuple:
        return (self.family_id, self.params)

    def __eq__(self, other):
        return isinstance(other, LatencyFunction) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"{type(self).__name__}({self.params!r})"

    def describe(self) -> str:
        raise NotImplementedError


def _as_domain_array(x: ArrayLike) -> Tuple[np.ndarray, bool]:
    scalar = np.ndim(x) == 0
    if isinstance(x, Fraction):
        x = float(x)
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise LatencyDomainError(f"Latency argument must be positive, got {x!r}")
    return arr, scalar


def _listify(params):
    if isinstance(params, tuple):
        return [_listify(p) for p in params]
    return params


def log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(lo), math.log(hi), points))


def check_monotone(f: LatencyFunction, lo: float = MONOTONE_GRID_RANGE[0],
                   hi: float = MONOTONE_GRID_RANGE[1],
                   points: int = MONOTONE_GRID_POINTS) -> bool:
    """
    Sampled monotonicity check on a log-spaced grid. Compared in the log domain so
    saturated values do not hide a decrease.
    """
    values = f.log_eval(log_grid(lo, hi, points))
    finite = values[np.isfinite(values)]
    steps = np.diff(values)
    # -inf -> -inf (zero region) gives nan; that is a flat stretch
    steps = steps[~np.isnan(steps)]
    scale = np.maximum(1.0, np.abs(finite).max()) if finite.size else 1.0
    return bool(np.all(steps >= -1e-12 * scale))


def growth_ratio_trace(f: LatencyFunction, xs: ArrayLike, i: float = 1.0) -> np.ndarray:
    """log_ratio(x+i, x) along xs; stays away from 0 for L1, decays to 0 for L2."""
    xs = np.asarray(xs, dtype=float)
    return f.log_ratio(xs + i, xs)


def require_monotone(f: LatencyFunction) -> None:
    if not check_monotone(f):
        raise InvalidLatency(f"{f!r} is not non-decreasing on the validation grid")
