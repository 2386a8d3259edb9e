"""Exact branch-and-price-and-cut solver for the split-collection VRPTW with
linear load-dependent edge costs (plain split-delivery VRPTW as the zero-slope
special case)."""

from .instances import Instance, derive, load_solomon, parse_solomon
from .bnb import RunParams, search

__all__ = [
    "Instance",
    "derive",
    "load_solomon",
    "parse_solomon",
    "RunParams",
    "search",
]
