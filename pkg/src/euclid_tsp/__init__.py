"""Approximate Euclidean TSP tours on randomly shifted quadtrees."""

from .baseline import constant_factor_tour
from .cli import RunConfig, run
from .geometry import Tour, preprocess, tour_cost
from .oracle import held_karp

__all__ = ["RunConfig", "Tour", "constant_factor_tour", "held_karp", "preprocess", "run", "tour_cost"]
