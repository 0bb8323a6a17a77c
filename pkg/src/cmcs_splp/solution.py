"""Incremental SPLP solution state.

A solution keeps, for every client, its closest and second-closest open
site so that opening costs O(n) and closing O(n |P|), and the objective is
maintained in ``value`` without recomputation.  Distances are compared by
rank in the client's site ordering, so cost ties go to the lower site index
and the incremental state always equals a from-scratch rebuild.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np

from . import kernels
from .instance import INDEX_DTYPE, Instance


# bookkeeping cost of one open/close call beyond its kernel steps
OP_WORK = 2000


class SolutionError(ValueError):
    pass


class SolutionState:
    __slots__ = ("inst", "y", "p", "q", "value", "size", "work", "backend")

    def __init__(self, inst: Instance, y, p, q, value: int, size: int, backend=None):
        self.inst = inst
        self.y = y
        self.p = p
        self.q = q
        self.value = value
        self.size = size
        self.work = 0
        self.backend = backend or kernels.active

    @property
    def opened(self) -> np.ndarray:
        """Open site indices, ascending."""
        return np.flatnonzero(self.y)

    def is_open(self, i: int) -> bool:
        return bool(self.y[i])

    def copy(self) -> "SolutionState":
        other = SolutionState(
            self.inst, self.y.copy(), self.p.copy(), self.q.copy(),
            self.value, self.size, self.backend,
        )
        other.work = self.work
        return other

    def open_site(self, i: int) -> int:
        """Open site ``i``; returns the objective change."""
        if self.y[i]:
            raise SolutionError(f"site {i} is already open")
        inst = self.inst
        delta, work = self.backend.open_site(
            inst.costs, inst.ranks.rank, self.y, self.p, self.q, i
        )
        delta += int(inst.fixed[i])
        self.value += delta
        self.size += 1
        self.work += work + OP_WORK
        return delta

    def close_site(self, i: int) -> int:
        """Close site ``i``; returns the objective change."""
        if not self.y[i]:
            raise SolutionError(f"site {i} is not open")
        if self.size <= 2:
            raise SolutionError("at least two sites must stay open")
        inst = self.inst
        delta, work = self.backend.close_site(
            inst.costs, inst.ranks.rank, self.y, self.p, self.q, i
        )
        delta -= int(inst.fixed[i])
        self.value += delta
        self.size -= 1
        self.work += work + OP_WORK
        return delta

    def check(self) -> None:
        """Assert every invariant against a from-scratch rebuild."""
        fresh = init_solution(self.inst, self.opened, backend=kernels.python)
        assert self.size == fresh.size == len(self.opened)
        assert self.value == fresh.value == objective(self), (self.value, fresh.value)
        assert np.array_equal(self.p, fresh.p)
        assert np.array_equal(self.q, fresh.q)

    def __repr__(self):
        return f"SolutionState(value={self.value}, opened={self.opened.tolist()})"


def init_solution(inst: Instance, opened: Iterable[int], backend=None) -> SolutionState:
    """Build a solution with the given 0-based open sites."""
    backend = backend or kernels.active
    sites = sorted({int(i) for i in opened})
    if len(sites) < 2:
        raise SolutionError("at least two sites must be open")
    if sites[0] < 0 or sites[-1] >= inst.m:
        raise SolutionError(f"site index out of range [0, {inst.m})")
    y = np.zeros(inst.m, dtype=np.uint8)
    y[sites] = 1
    p = np.empty(inst.n, dtype=INDEX_DTYPE)
    q = np.empty(inst.n, dtype=INDEX_DTYPE)
    transport, work = backend.assign(inst.ranks.order, inst.costs, y, p, q)
    value = int(inst.fixed[sites].sum()) + int(transport)
    state = SolutionState(inst, y, p, q, value, len(sites), backend)
    state.work = work
    return state


def objective_of(inst: Instance, opened: Iterable[int]) -> int:
    """Objective of an arbitrary non-empty open set, computed directly."""
    sites = np.asarray(sorted({int(i) for i in opened}), dtype=np.int64)
    if len(sites) == 0:
        raise SolutionError("at least one site must be open")
    return int(inst.fixed[sites].sum() + inst.costs[sites].min(axis=0).sum())


def objective(state: SolutionState) -> int:
    """Objective recomputed from the open set, ignoring all caches."""
    return objective_of(state.inst, state.opened)


# ---------------------------------------------------------------------------
# Solution files: "value <v>" then 1-based open sites, ascending.


def format_solution(value: int, opened: Iterable[int]) -> str:
    sites = sorted(int(i) + 1 for i in opened)
    return f"value {value}\n{' '.join(map(str, sites))}\n"


def parse_solution(text: str) -> tuple[int | None, list[int]]:
    """Returns (stated value or None, 0-based open sites)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    value = None
    if lines and lines[0].lower().startswith("value"):
        parts = lines[0].split()
        if len(parts) != 2:
            raise SolutionError("malformed 'value' line")
        try:
            value = int(parts[1])
        except ValueError:
            raise SolutionError(f"non-integer value {parts[1]!r}") from None
        lines = lines[1:]
    sites = []
    for ln in lines:
        for tok in ln.split():
            try:
                sites.append(int(tok) - 1)
            except ValueError:
                raise SolutionError(f"non-integer site index {tok!r}") from None
    return value, sites


def write_solution(path: str | Path, state: SolutionState) -> None:
    Path(path).write_text(format_solution(state.value, state.opened))
