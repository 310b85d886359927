"""Latency function families and their common interface."""

from anarchia.latency.base import (
    LatencyClass,
    LatencyFunction,
    check_monotone,
    growth_ratio_trace,
)

__all__ = ["LatencyClass", "LatencyFunction", "check_monotone", "growth_ratio_trace"]
