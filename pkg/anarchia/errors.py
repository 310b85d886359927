"""
Exception types raised across the package. Everything derives from ValueError so
callers that only care about bad input can keep catching that.
"""


class AnarchiaError(ValueError):
    """Base class for all domain errors"""


class LatencyDomainError(AnarchiaError):
    """Latency evaluated outside x > 0"""


class InvalidLatency(AnarchiaError):
    """Latency parameters rejected at construction"""


class GameFormatError(AnarchiaError):
    """Game or config file could not be parsed"""


class CapExceeded(AnarchiaError):
    """Profile space larger than the enumeration cap"""

    def __init__(self, profiles: int, cap: int):
        super().__init__(f"Profile space has {profiles} states, cap is {cap}")
        self.profiles = profiles
        self.cap = cap


class NoEquilibrium(AnarchiaError):
    """Game has no pure Nash equilibrium"""


class RefCostZero(AnarchiaError):
    """Reference state has zero social cost"""


class DegenerateDenominator(AnarchiaError):
    """Bound expression denominator collapsed although j >= x"""


class InvalidParams(AnarchiaError):
    """Lower-bound family parameters violate their invariants"""


class DisjointnessViolated(AnarchiaError):
    """A player's two strategies share a resource"""


class NotEquilibrium(AnarchiaError):
    """Ratio requested for a state that is not a Nash equilibrium"""


class NoFeasibleParams(AnarchiaError):
    """Parameter search found no instance whose first state is stable"""
