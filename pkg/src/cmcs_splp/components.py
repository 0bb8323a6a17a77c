"""The six component families applied by CMCS.

Two mutations (``open_random(k)``, ``close_random(k)``) and four local
searches (``open_best``, ``close_best``, ``exchange_best``,
``exchange_half_fixed``).  Local searches move only on strict improvement
and leave the state untouched otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

from .solution import SolutionState

OPEN_RANDOM = "open_random"
CLOSE_RANDOM = "close_random"
OPEN_BEST = "open_best"
CLOSE_BEST = "close_best"
EXCHANGE_BEST = "exchange_best"
EXCHANGE_HALF_FIXED = "exchange_half_fixed"

MUTATIONS = (OPEN_RANDOM, CLOSE_RANDOM)
LOCAL_SEARCHES = (OPEN_BEST, CLOSE_BEST, EXCHANGE_BEST, EXCHANGE_HALF_FIXED)
# explore a fixed neighbourhood and move iff it improves
CLASSIC_LOCAL_SEARCHES = (OPEN_BEST, CLOSE_BEST, EXCHANGE_BEST)

# Interpreter-side costs in kernel steps, so that work tracks elapsed time:
# one Generator.choice call, and the setup of one neighbourhood kernel call.
DRAW_WORK = 4500
CALL_WORK = 1500


class Outcome(NamedTuple):
    improved: bool
    delta: int


_UNCHANGED = Outcome(False, 0)


def open_random(state: SolutionState, k: int, rng) -> Outcome:
    """Draw ``k`` distinct sites and open those that are closed."""
    m = state.inst.m
    draws = rng.choice(m, size=min(k, m), replace=False)
    state.work += DRAW_WORK
    delta = 0
    for i in sorted(int(i) for i in draws):
        if not state.y[i]:
            delta += state.open_site(i)
    return Outcome(delta < 0, delta)


def close_random(state: SolutionState, k: int, rng) -> Outcome:
    """Close ``min(k, |P| - 2)`` distinct open sites chosen uniformly."""
    count = min(k, state.size - 2)
    if count <= 0:
        return _UNCHANGED
    chosen = rng.choice(state.opened, size=count, replace=False)
    state.work += DRAW_WORK
    delta = 0
    for i in sorted(int(i) for i in chosen):
        delta += state.close_site(i)
    return Outcome(delta < 0, delta)


def open_best(state: SolutionState) -> Outcome:
    inst = state.inst
    best, delta, work = state.backend.open_best(
        inst.fixed, inst.costs, inst.ranks.order, inst.ranks.cost, inst.ranks.rank, state.y, state.p
    )
    state.work += work + CALL_WORK
    if best < 0 or delta >= 0:
        return _UNCHANGED
    applied = state.open_site(best)
    assert applied == delta
    return Outcome(True, applied)


def close_best(state: SolutionState) -> Outcome:
    if state.size < 3:
        return _UNCHANGED
    inst = state.inst
    best, delta, work = state.backend.close_best(
        inst.fixed, inst.costs, state.y, state.p, state.q
    )
    state.work += work + CALL_WORK
    if best < 0 or delta >= 0:
        return _UNCHANGED
    applied = state.close_site(best)
    assert applied == delta
    return Outcome(True, applied)


def _swap(state: SolutionState, out: int, into: int, delta: int) -> Outcome:
    # open first: closing first could momentarily leave a single open site
    applied = state.open_site(into) + state.close_site(out)
    assert applied == delta
    return Outcome(True, applied)


def exchange_best(state: SolutionState) -> Outcome:
    inst = state.inst
    out, into, delta, work = state.backend.exchange_best(
        inst.fixed, inst.costs, inst.ranks.order, inst.ranks.cost, inst.ranks.rank,
        state.y, state.p, state.q,
    )
    state.work += work + CALL_WORK
    if out < 0 or delta >= 0:
        return _UNCHANGED
    return _swap(state, out, into, delta)


def exchange_half_fixed(state: SolutionState, rng, close_site: int | None = None) -> Outcome:
    """Close a random open site and open the best replacement, if improving.

    ``close_site`` pins the site to close instead of drawing it.
    """
    inst = state.inst
    if close_site is None:
        opened = state.opened
        out = int(opened[rng.integers(len(opened))])
    else:
        out = int(close_site)
    if not state.y[out]:
        raise ValueError(f"site {out} is not open")
    into, delta, work = state.backend.exchange_fixed(
        inst.fixed, inst.costs, inst.ranks.order, inst.ranks.cost, inst.ranks.rank,
        state.y, state.p, state.q, out,
    )
    state.work += work + CALL_WORK
    if into < 0 or delta >= 0:
        return _UNCHANGED
    return _swap(state, out, into, delta)


_NAME_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*(\d+)\s*\))?\s*$")


@dataclass(frozen=True)
class ComponentSpec:
    kind: str
    k: int | None = None

    def __post_init__(self):
        if self.kind in MUTATIONS:
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.kind} needs a positive k")
        elif self.kind in LOCAL_SEARCHES:
            if self.k is not None:
                raise ValueError(f"{self.kind} takes no k")
        else:
            raise ValueError(f"unknown component {self.kind!r}")

    @classmethod
    def parse(cls, name: str) -> "ComponentSpec":
        match = _NAME_RE.match(name)
        if not match:
            raise ValueError(f"unknown component {name!r}")
        kind, k = match.groups()
        return cls(kind, int(k) if k is not None else None)

    @property
    def name(self) -> str:
        return f"{self.kind}({self.k})" if self.k is not None else self.kind

    @property
    def improvement_pressure(self) -> bool:
        return self.kind in LOCAL_SEARCHES

    @property
    def can_worsen(self) -> bool:
        return self.kind in MUTATIONS

    @property
    def classic_deterministic_ls(self) -> bool:
        return self.kind in CLASSIC_LOCAL_SEARCHES

    def apply(self, state: SolutionState, rng) -> Outcome:
        kind = self.kind
        if kind == OPEN_RANDOM:
            return open_random(state, self.k, rng)
        if kind == CLOSE_RANDOM:
            return close_random(state, self.k, rng)
        if kind == OPEN_BEST:
            return open_best(state)
        if kind == CLOSE_BEST:
            return close_best(state)
        if kind == EXCHANGE_BEST:
            return exchange_best(state)
        return exchange_half_fixed(state, rng)

    def __str__(self):
        return self.name


def paper_pool() -> list[ComponentSpec]:
    """The 12-component pool: four local searches, then both mutations for k = 1..4."""
    pool = [ComponentSpec(kind) for kind in LOCAL_SEARCHES]
    pool += [ComponentSpec(OPEN_RANDOM, k) for k in range(1, 5)]
    pool += [ComponentSpec(CLOSE_RANDOM, k) for k in range(1, 5)]
    return pool
