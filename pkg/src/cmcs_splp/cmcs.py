"""Conditional Markov Chain Search executor and configurations.

A configuration is an ordered list of components plus two row-stochastic
transition matrices: ``succ`` is consulted after a component strictly
improved the current solution, ``fail`` otherwise.  Execution starts at the
first component and never backtracks; the best solution seen is kept aside.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .components import ComponentSpec
from .instance import Instance
from .solution import SolutionState, init_solution

ROW_TOLERANCE = 1e-9
# work charged per component application on top of kernel steps, roughly the
# interpreter overhead of one iteration expressed in kernel steps
STEP_WORK = 1000
FORMAT_HEADER = "cmcs-config 1"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Configuration:
    components: tuple
    succ: np.ndarray
    fail: np.ndarray
    label: str = ""

    def __post_init__(self):
        k = len(self.components)
        if k == 0:
            raise ConfigError("configuration needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        for which in ("succ", "fail"):
            mat = np.array(getattr(self, which), dtype=float)
            if mat.shape != (k, k):
                raise ConfigError(f"{which} matrix must be {k}x{k}, got {mat.shape}")
            for h, row in enumerate(mat):
                if (row < 0).any():
                    raise ConfigError(f"{which} row {h + 1} has a negative entry")
                if abs(row.sum() - 1.0) > ROW_TOLERANCE:
                    raise ConfigError(f"{which} row {h + 1} sums to {row.sum():g}, not 1")
            mat.setflags(write=False)
            object.__setattr__(self, which, mat)

    @classmethod
    def deterministic(cls, components: Sequence, succ_next: Sequence[int],
                      fail_next: Sequence[int], label: str = "") -> "Configuration":
        """Build from successor lists: row h goes to ``succ_next[h]`` / ``fail_next[h]``."""
        k = len(components)
        eye = np.eye(k)
        return cls(tuple(components), eye[list(succ_next)], eye[list(fail_next)], label)

    def __len__(self):
        return len(self.components)

    @property
    def is_deterministic(self) -> bool:
        return all(
            ((row == 0) | (row == 1)).all() and (row == 1).sum() == 1
            for mat in (self.succ, self.fail) for row in mat
        )

    def successors(self) -> tuple[list[int], list[int]]:
        """Successor lists of a deterministic configuration."""
        if not self.is_deterministic:
            raise ConfigError("configuration is not deterministic")
        return ([int(np.argmax(r)) for r in self.succ], [int(np.argmax(r)) for r in self.fail])

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.components]

    def canonical(self) -> str:
        return write_config(self, with_label=False)

    @property
    def config_id(self) -> str:
        return hashlib.sha1(self.canonical().encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.succ, other.succ)
            and np.array_equal(self.fail, other.fail)
        )

    def __hash__(self):
        return hash(self.canonical())

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<Configuration{tag} {', '.join(self.names)}>"


# ---------------------------------------------------------------------------
# Text format


def _fmt_prob(x: float) -> str:
    if x == 0:
        return "0"
    if x == 1:
        return "1"
    return f"{x:.12g}"


def write_config(config: Configuration, with_label: bool = True) -> str:
    lines = [FORMAT_HEADER, "components: " + ", ".join(config.names)]
    lines += ["succ: " + " ".join(map(_fmt_prob, row)) for row in config.succ]
    lines += ["fail: " + " ".join(map(_fmt_prob, row)) for row in config.fail]
    if with_label and config.label:
        lines.append(f"# label: {config.label}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> Configuration:
    label = ""
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("label:"):
                label = body[len("label:"):].strip()
            continue
        lines.append(line)
    if not lines or lines[0].split() != FORMAT_HEADER.split():
        raise ConfigError(f"first line must be '{FORMAT_HEADER}'")
    if len(lines) < 2 or not lines[1].startswith("components:"):
        raise ConfigError("second line must list components")
    names = [s.strip() for s in lines[1][len("components:"):].split(",") if s.strip()]
    try:
        components = tuple(ComponentSpec.parse(name) for name in names)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    k = len(components)
    rows = {"succ": [], "fail": []}
    for line in lines[2:]:
        tag, _, body = line.partition(":")
        if tag not in rows:
            raise ConfigError(f"unexpected line {line!r}")
        try:
            rows[tag].append([float(x) for x in body.split()])
        except ValueError:
            raise ConfigError(f"non-numeric probability in {line!r}") from None
    for tag, mat in rows.items():
        if len(mat) != k or any(len(r) != k for r in mat):
            raise ConfigError(f"{tag} matrix must be {k}x{k}")
    return Configuration(components, np.array(rows["succ"]), np.array(rows["fail"]), label)


# ---------------------------------------------------------------------------
# Presets

_PRESETS = {
    # open greedily, then close four random sites when stuck
    "paper-2": (["open_best", "close_random(4)"], [0, 0], [1, 0]),
    # the open_random(4) success row is not shown in the source figure;
    # it repeats the fail row
    "paper-3": (["close_best", "exchange_half_fixed", "open_random(4)"], [0, 0, 1], [1, 2, 1]),
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> Configuration:
    try:
        names, succ, fail = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}") from None
    return Configuration.deterministic([ComponentSpec.parse(n) for n in names], succ, fail, name)


def load_config(spec: str) -> Configuration:
    """A preset name or a path to a config file."""
    if spec in _PRESETS:
        return preset(spec)
    with open(spec) as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# Execution


@dataclass
class RunResult:
    best_solution: SolutionState
    best_value: int
    iterations: int
    work: int = 0
    elapsed: float = 0.0
    trace: list | None = field(default=None, repr=False)


class _Wheel:
    """Roulette-wheel selection over the rows of one transition matrix."""

    def __init__(self, mat: np.ndarray):
        self.fixed = []
        self.cumulative = []
        for row in mat:
            nz = np.flatnonzero(row)
            if len(nz) == 1:
                self.fixed.append(int(nz[0]))
                self.cumulative.append(None)
            else:
                self.fixed.append(-1)
                self.cumulative.append(np.cumsum(row))

    def next(self, h: int, rng) -> int:
        nxt = self.fixed[h]
        if nxt >= 0:
            return nxt
        cum = self.cumulative[h]
        x = rng.random() * cum[-1]
        return min(int(np.searchsorted(cum, x, side="right")), len(cum) - 1)


def execute(
    config: Configuration,
    state,
    rng,
    *,
    budget_ms: float | None = None,
    work_budget: int | None = None,
    max_iterations: int | None = None,
    trace: bool = False,
    clock=time.monotonic,
) -> RunResult:
    """Run CMCS on ``state`` in place until a budget is exhausted.

    Budgets are checked before every component application.  ``work_budget``
    counts kernel steps (see ``SolutionState.work``) and makes a run
    reproducible independently of machine speed.
    """
    if budget_ms is None and work_budget is None and max_iterations is None:
        raise ValueError("no stopping criterion given")
    start = clock()
    deadline = None if budget_ms is None else start + budget_ms / 1000.0
    work_limit = None if work_budget is None else state.work + work_budget
    work0 = state.work

    components = config.components
    succ, fail = _Wheel(config.succ), _Wheel(config.fail)
    best = state.copy()
    best_value = f_prev = state.value
    h = 0
    it = 0
    steps = [] if trace else None
    while True:
        if max_iterations is not None and it >= max_iterations:
            break
        if work_limit is not None and state.work >= work_limit:
            break
        if deadline is not None and clock() >= deadline:
            break
        components[h].apply(state, rng)
        state.work += STEP_WORK
        f_cur = state.value
        improved = f_cur < f_prev
        if steps is not None:
            steps.append((h, improved))
        if improved:
            if f_cur < best_value:
                best = state.copy()
                best_value = f_cur
            h = succ.next(h, rng)
        else:
            h = fail.next(h, rng)
        f_prev = f_cur
        it += 1
    return RunResult(best, best_value, it, state.work - work0, clock() - start, steps)


def run_cmcs(
    config: Configuration,
    inst: Instance,
    s0: Iterable[int],
    budget_ms: float | None = None,
    rng=None,
    *,
    work_budget: int | None = None,
    max_iterations: int | None = None,
    trace: bool = False,
    backend=None,
) -> RunResult:
    """Solve ``inst`` from the 0-based open set ``s0``."""
    if budget_ms is not None and budget_ms <= 0:
        raise ValueError("budget must be positive")
    if work_budget is not None and work_budget <= 0:
        raise ValueError("work budget must be positive")
    if rng is None or isinstance(rng, (int, np.integer, np.random.SeedSequence)):
        rng = np.random.default_rng(rng)
    state = init_solution(inst, s0, backend=backend)
    return execute(
        config, state, rng, budget_ms=budget_ms, work_budget=work_budget,
        max_iterations=max_iterations, trace=trace,
    )
