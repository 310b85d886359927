"""
anarchia: pure Nash equilibria, price of anarchy and exact PoA bounds for weighted
unsplittable congestion games.
"""

__version__ = "0.1.0"
