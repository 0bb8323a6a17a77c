"""Conditional Markov Chain Search for the Simple Plant Location Problem."""

from .instance import Instance, KgClass, generate_kg_instance, parse_instance, write_instance
from .solution import SolutionState, init_solution, objective

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "KgClass",
    "SolutionState",
    "generate_kg_instance",
    "init_solution",
    "objective",
    "parse_instance",
    "write_instance",
]
