"""
This is the registry module for latency families. It is responsible for centralizing the
registration and retrieval of latency families, and for building instances from the
{"family": ..., "params": [...]} spec used in game files and on the command line.
"""

import logging
from typing import Type

from anarchia.errors import InvalidLatency
from anarchia.latency.base import LatencyFunction
from anarchia.latency.families import (
    Constant,
    ExpBase,
    ExpLogPower,
    Factorial,
    PolyLogProduct,
    PolySum,
    PowerLog,
    PowerSelf,
)

logger = logging.getLogger(__name__)


class LatencyRegistry:
    _families = {}

    @classmethod
    def register(cls, name: str, family: Type[LatencyFunction]):
        """Register a latency family"""
        if not issubclass(family, LatencyFunction):
            raise TypeError("Family must be a subclass of LatencyFunction")
        cls._families[name.lower()] = family
        logger.debug(f"Registered latency family: {name}")

    @classmethod
    def get(cls, name: str) -> Type[LatencyFunction]:
        """Get a latency family class by name"""
        name_lower = name.lower()
        if name_lower not in cls._families:
            available = ", ".join(cls._families.keys())
            raise ValueError(
                f"Family '{name}' is not supported. Available families: {available}"
            )
        return cls._families[name_lower]

    @classmethod
    def build(cls, name: str, params) -> LatencyFunction:
        """Instantiate a family with its parameters"""
        family = cls.get(name)
        try:
            return family(params)
        except InvalidLatency:
            raise
        except Exception as e:
            logger.error(f"Failed to build latency {name} with params {params!r}: {e}")
            raise InvalidLatency(f"Failed to build latency '{name}': {e}")

    @classmethod
    def from_spec(cls, spec: dict) -> LatencyFunction:
        if not isinstance(spec, dict) or "family" not in spec:
            raise InvalidLatency(f"Latency spec must be an object with 'family', got {spec!r}")
        return cls.build(spec["family"], spec.get("params", []))

    @classmethod
    def list_families(cls) -> list:
        """List all registered family names"""
        return list(cls._families.keys())


def parse_cli_params(family: str, raw: str):
    """
    Parse the --params flag. poly_log_product takes its two coefficient lists split by
    ';' ("0,0,1;1,1"); every other family takes one comma list.
    """
    def floats(chunk):
        return [float(p) for p in chunk.split(",") if p.strip()]

    try:
        if family.lower() == PolyLogProduct.family_id:
            poly, _, logs = (raw or "").partition(";")
            return [floats(poly), floats(logs)]
        return floats(raw or "")
    except ValueError:
        raise InvalidLatency(f"Invalid parameter list: {raw!r}")


# Register families
for _family in (PolySum, PolyLogProduct, ExpBase, PowerSelf, Factorial, ExpLogPower, PowerLog, Constant):
    LatencyRegistry.register(_family.family_id, _family)
