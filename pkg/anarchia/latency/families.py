import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma, gammaln, logsumexp

from anarchia.errors import InvalidLatency
from anarchia.latency.base import LatencyClass, LatencyFunction, require_monotone

# argmin of Gamma(x+1) on x > 0; Factorial is held flat below it
GAMMA_ARGMIN = 0.46163214496836234


def _coefficients(raw: Sequence, name: str) -> tuple:
    try:
        coeffs = tuple(float(c) for c in raw)
    except (TypeError, ValueError):
        raise InvalidLatency(f"{name} coefficients must be numbers, got {raw!r}")
    if not coeffs:
        raise InvalidLatency(f"{name} needs at least one coefficient")
    if any(not math.isfinite(c) for c in coeffs):
        raise InvalidLatency(f"{name} coefficients must be finite")
    return coeffs


def _log_poly(coeffs: tuple, x: np.ndarray) -> np.ndarray:
    """ln(sum a_q x^q) for non-negative a_q, via log-sum-exp over the terms."""
    lx = np.log(x)
    terms = [math.log(a) + q * lx for q, a in enumerate(coeffs) if a > 0]
    return logsumexp(np.stack(terms), axis=0)


class PolySum(LatencyFunction):
    """l(x) = sum_q a_q x^q with a_q >= 0"""

    family_id = "poly_sum"
    class_tag = LatencyClass.L3

    def __init__(self, params: Sequence[float]):
        coeffs = _coefficients(params, "poly_sum")
        if any(c < 0 for c in coeffs) or not any(c > 0 for c in coeffs):
            raise InvalidLatency("poly_sum coefficients must be >= 0 and not all zero")
        super().__init__(coeffs)

    def _log_eval(self, x):
        return _log_poly(self.params, x)

    def _eval(self, x):
        with np.errstate(over="ignore"):
            return np.polynomial.polynomial.polyval(x, self.params)

    def exact_eval(self, x: Fraction) -> Optional[Fraction]:
        total = Fraction(0)
        for q, a in enumerate(self.params):
            total += Fraction(a) * Fraction(x) ** q
        return total

    @property
    def degree(self) -> int:
        return max(q for q, a in enumerate(self.params) if a > 0)

    def describe(self) -> str:
        return " + ".join(f"{a:g}*x^{q}" for q, a in enumerate(self.params) if a > 0)


class PolyLogProduct(LatencyFunction):
    """
    l(x) = (sum_q a_q x^q) * max(0, sum_q b_q ln^q x)

    The log factor is clipped at zero, so l vanishes where it would be negative;
    instances that are not non-decreasing on the validation grid are rejected.
    """

    family_id = "poly_log_product"
    class_tag = LatencyClass.L3

    def __init__(self, params: Sequence):
        try:
            poly_raw, log_raw = params
        except (TypeError, ValueError):
            raise InvalidLatency("poly_log_product params must be [[a_0..a_d], [b_0..b_m]]")
        poly = _coefficients(poly_raw, "poly_log_product")
        logs = _coefficients(log_raw, "poly_log_product")
        if any(c < 0 for c in poly) or not any(c > 0 for c in poly):
            raise InvalidLatency("poly_log_product polynomial coefficients must be >= 0")
        super().__init__((poly, logs))
        require_monotone(self)

    def _log_factor(self, x):
        return np.polynomial.polynomial.polyval(np.log(x), self.params[1])

    def _log_eval(self, x):
        factor = self._log_factor(x)
        with np.errstate(divide="ignore"):
            log_factor = np.where(factor > 0, np.log(np.where(factor > 0, factor, 1.0)), -np.inf)
        return _log_poly(self.params[0], x) + log_factor

    def _eval(self, x):
        with np.errstate(over="ignore"):
            poly = np.polynomial.polynomial.polyval(x, self.params[0])
        return poly * np.maximum(0.0, self._log_factor(x))

    def describe(self) -> str:
        return f"poly{list(self.params[0])} * logpoly{list(self.params[1])}"


class ExpBase(LatencyFunction):
    """l(x) = c * a^x with a > 1; params [a] or [a, c]"""

    family_id = "exp_base"
    class_tag = LatencyClass.L1

    def __init__(self, params: Sequence[float]):
        coeffs = _coefficients(params, "exp_base")
        if len(coeffs) == 1:
            coeffs = (coeffs[0], 1.0)
        if len(coeffs) != 2 or coeffs[0] <= 1 or coeffs[1] <= 0:
            raise InvalidLatency("exp_base params are [a] or [a, c] with a > 1, c > 0")
        super().__init__(coeffs)

    def _log_eval(self, x):
        base, coef = self.params
        return math.log(coef) + x * math.log(base)

    def _eval(self, x):
        base, coef = self.params
        with np.errstate(over="ignore"):
            return coef * np.power(base, x)

    def describe(self) -> str:
        return f"{self.params[1]:g}*{self.params[0]:g}^x"


class PowerSelf(LatencyFunction):
    """l(x) = c * x^x for x >= 1, held at c below 1 (x^x dips under 1 on (0, 1))"""

    family_id = "power_self"
    class_tag = LatencyClass.L1

    def __init__(self, params: Sequence[float] = ()):
        coeffs = tuple(float(c) for c in params) or (1.0,)
        if len(coeffs) != 1 or coeffs[0] <= 0:
            raise InvalidLatency("power_self params are [] or [c] with c > 0")
        super().__init__(coeffs)

    def _log_eval(self, x):
        return math.log(self.params[0]) + x * np.log(np.maximum(x, 1.0))

    def describe(self) -> str:
        return f"{self.params[0]:g}*x^x"


class Factorial(LatencyFunction):
    """l(x) = c * Gamma(x+1), flat below the minimum of Gamma(x+1) so it never decreases"""

    family_id = "factorial"
    class_tag = LatencyClass.L1

    def __init__(self, params: Sequence[float] = ()):
        coeffs = tuple(float(c) for c in params) or (1.0,)
        if len(coeffs) != 1 or coeffs[0] <= 0:
            raise InvalidLatency("factorial params are [] or [c] with c > 0")
        super().__init__(coeffs)

    def _log_eval(self, x):
        return math.log(self.params[0]) + gammaln(np.maximum(x, GAMMA_ARGMIN) + 1.0)

    def _eval(self, x):
        with np.errstate(over="ignore"):
            return self.params[0] * gamma(np.maximum(x, GAMMA_ARGMIN) + 1.0)

    def describe(self) -> str:
        return f"{self.params[0]:g}*x!"


class ExpLogPower(LatencyFunction):
    """l(x) = a * exp(ln^(1+eps) x) for x >= 1, held at a below 1; params [a, eps]"""

    family_id = "exp_log_power"
    class_tag = LatencyClass.L2

    def __init__(self, params: Sequence[float]):
        coeffs = _coefficients(params, self.family_id)
        if len(coeffs) != 2 or coeffs[0] <= 0 or coeffs[1] <= 0:
            raise InvalidLatency(f"{self.family_id} params are [a, eps] with a > 0, eps > 0")
        super().__init__(coeffs)

    @property
    def epsilon(self) -> float:
        return self.params[1]

    def _log_eval(self, x):
        a, eps = self.params
        return math.log(a) + np.power(np.maximum(np.log(x), 0.0), 1.0 + eps)

    def describe(self) -> str:
        return f"{self.params[0]:g}*exp(ln(x)^{1 + self.params[1]:g})"


class PowerLog(ExpLogPower):
    """l(x) = a * x^(ln^m x), i.e. exp(ln^(1+m) x); params [a, m]"""

    family_id = "power_log"

    def describe(self) -> str:
        return f"{self.params[0]:g}*x^(ln(x)^{self.params[1]:g})"


class Constant(LatencyFunction):
    """l(x) = c"""

    family_id = "constant"
    class_tag = LatencyClass.L3

    def __init__(self, params: Sequence[float]):
        coeffs = _coefficients(params, "constant")
        if len(coeffs) != 1 or coeffs[0] <= 0:
            raise InvalidLatency("constant params are [c] with c > 0")
        super().__init__(coeffs)

    def _log_eval(self, x):
        return np.full_like(x, math.log(self.params[0]))

    def _eval(self, x):
        return np.full_like(x, self.params[0])

    def exact_eval(self, x: Fraction) -> Optional[Fraction]:
        return Fraction(self.params[0])

    def describe(self) -> str:
        return f"{self.params[0]:g}"
