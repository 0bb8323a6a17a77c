"""SPLP instance model, file formats and the Korkel-Ghosh style generator.

Site and client indices are 0-based inside the library; every file format
uses 1-based indices where indices appear at all.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

COST_DTYPE = np.int64
INDEX_DTYPE = np.int32


class InstanceFormatError(ValueError):
    """Raised when instance text cannot be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class KgClass(str, enum.Enum):
    A = "a"
    B = "b"
    C = "c"

    @property
    def fixed_range(self) -> tuple[int, int]:
        return _KG_FIXED[self]

    @classmethod
    def parse(cls, text: str) -> "KgClass":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown KG class {text!r} (expected a, b or c)") from None


_KG_FIXED = {
    KgClass.A: (100, 200),
    KgClass.B: (1000, 2000),
    KgClass.C: (10000, 20000),
}
KG_TRANSPORT_RANGE = (1000, 2000)


@dataclass(frozen=True, eq=False)
class RankMatrix:
    """Per-client site orderings.

    ``order[j, r]`` is the site with rank ``r`` for client ``j`` (nearest
    first, ties broken by lower site index); ``rank[i, j]`` is its inverse.
    ``cost[j, r]`` is ``c[order[j, r], j]``, stored client-major so that
    rank-bounded scans read contiguous memory.
    """

    order: np.ndarray
    rank: np.ndarray
    cost: np.ndarray


@dataclass(frozen=True, eq=False)
class Instance:
    fixed: np.ndarray
    costs: np.ndarray
    name: str = ""

    def __post_init__(self):
        fixed = np.ascontiguousarray(self.fixed, dtype=COST_DTYPE)
        costs = np.ascontiguousarray(self.costs, dtype=COST_DTYPE)
        if fixed.ndim != 1:
            raise ValueError("fixed costs must be a vector")
        if costs.ndim != 2 or costs.shape[0] != fixed.shape[0]:
            raise ValueError("cost matrix must have one row per site")
        if fixed.shape[0] < 2:
            raise ValueError("m must be >= 2")
        if costs.shape[1] < 1:
            raise ValueError("n must be >= 1")
        if (fixed < 0).any() or (costs < 0).any():
            raise ValueError("costs must be non-negative")
        fixed.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "costs", costs)

    @property
    def m(self) -> int:
        return self.fixed.shape[0]

    @property
    def n(self) -> int:
        return self.costs.shape[1]

    @cached_property
    def ranks(self) -> RankMatrix:
        return build_rank_matrix(self)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            np.array_equal(self.fixed, other.fixed)
            and np.array_equal(self.costs, other.costs)
        )

    def __hash__(self):
        return hash((self.m, self.n, self.fixed.tobytes(), self.costs.tobytes()))

    def __repr__(self):
        return f"Instance(name={self.name!r}, m={self.m}, n={self.n})"


def build_rank_matrix(inst: Instance) -> RankMatrix:
    order = np.argsort(inst.costs.T, axis=1, kind="stable").astype(INDEX_DTYPE)
    rank = np.empty((inst.m, inst.n), dtype=INDEX_DTYPE)
    cols = np.arange(inst.n)[:, None]
    rank[order, cols] = np.arange(inst.m, dtype=INDEX_DTYPE)[None, :]
    cost = np.ascontiguousarray(np.take_along_axis(inst.costs.T, order, axis=1))
    for arr in (order, rank, cost):
        arr.setflags(write=False)
    return RankMatrix(order=order, rank=rank, cost=cost)


# ---------------------------------------------------------------------------
# Parsing


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens.extend((tok, lineno) for tok in line.split())
    return tokens


def _as_int(tok: str, lineno: int, what: str = "value") -> int:
    try:
        value = int(tok)
    except ValueError:
        raise InstanceFormatError(f"non-integer {what} {tok!r}", lineno) from None
    return value


def _as_cost(tok: str, lineno: int) -> int:
    value = _as_int(tok, lineno, "cost")
    if value < 0:
        raise InstanceFormatError(f"negative cost {value}", lineno)
    return value


def _check_header(m: int, n: int, lineno: int) -> None:
    if m < 2:
        raise InstanceFormatError("m must be >= 2", lineno)
    if n < 1:
        raise InstanceFormatError("n must be >= 1", lineno)


def _parse_canonical(text: str, name: str) -> Instance:
    lines = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise InstanceFormatError("empty input")
    no, header = lines[0]
    if len(header) != 2:
        raise InstanceFormatError(f"header must be 'm n', got {len(header)} tokens", no)
    m, n = (_as_int(t, no, "header field") for t in header)
    _check_header(m, n, no)
    rows = lines[1:]
    if len(rows) != m:
        last = rows[-1][0] if rows else no
        raise InstanceFormatError(f"expected {m} site rows, found {len(rows)}", last)
    fixed = np.empty(m, dtype=COST_DTYPE)
    costs = np.empty((m, n), dtype=COST_DTYPE)
    for i, (no, toks) in enumerate(rows):
        if len(toks) != n + 1:
            raise InstanceFormatError(
                f"site row has {len(toks)} values, expected {n + 1}", no
            )
        fixed[i] = _as_cost(toks[0], no)
        costs[i] = [_as_cost(t, no) for t in toks[1:]]
    return Instance(fixed, costs, name)


def _parse_ufllib(text: str, name: str) -> Instance:
    # "FILE: <name>" / "m n 0" / m rows of "<site> <fixed> <c_1> ... <c_n>"
    lines = [(no, ln.split()) for no, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    no, first = lines[0]
    if not first or not first[0].upper().startswith("FILE"):
        raise InstanceFormatError("missing 'FILE:' header", no)
    if len(first) > 1 and not name:
        name = first[-1]
    no, header = lines[1]
    if len(header) < 2:
        raise InstanceFormatError("header must start with 'm n'", no)
    m, n = (_as_int(t, no, "header field") for t in header[:2])
    _check_header(m, n, no)
    tokens = [(t, no) for no, toks in lines[2:] for t in toks]
    if len(tokens) != m * (n + 2):
        raise InstanceFormatError(
            f"expected {m * (n + 2)} values after header, found {len(tokens)}", no
        )
    fixed = np.empty(m, dtype=COST_DTYPE)
    costs = np.empty((m, n), dtype=COST_DTYPE)
    stride = n + 2
    for i in range(m):
        row = tokens[i * stride:(i + 1) * stride]
        site = _as_int(row[0][0], row[0][1], "site index")
        if site != i + 1:
            raise InstanceFormatError(f"site rows out of order: got {site}, expected {i + 1}", row[0][1])
        fixed[i] = _as_cost(*row[1])
        costs[i] = [_as_cost(t, ln) for t, ln in row[2:]]
    return Instance(fixed, costs, name)


def _parse_orlib(text: str, name: str) -> Instance:
    # "m n" / m rows "<capacity> <fixed>" / per client: "<demand>" then m costs
    tokens = _tokenize(text)
    if len(tokens) < 2:
        raise InstanceFormatError("empty input")
    m = _as_int(*tokens[0])
    n = _as_int(*tokens[1])
    _check_header(m, n, tokens[1][1])
    expected = 2 + 2 * m + n * (m + 1)
    if len(tokens) != expected:
        raise InstanceFormatError(
            f"expected {expected} tokens for OR-Library layout, found {len(tokens)}",
            tokens[-1][1],
        )
    fixed = np.empty(m, dtype=COST_DTYPE)
    pos = 2
    for i in range(m):
        fixed[i] = _as_cost(*tokens[pos + 1])
        pos += 2
    costs = np.empty((m, n), dtype=COST_DTYPE)
    for j in range(n):
        pos += 1  # demand, ignored: every client has unit demand
        for i in range(m):
            costs[i, j] = _as_cost(*tokens[pos])
            pos += 1
    return Instance(fixed, costs, name)


_FORMATS = (
    ("canonical", _parse_canonical),
    ("ufllib", _parse_ufllib),
    ("orlib", _parse_orlib),
)


def parse_instance(text: str, name: str = "", fmt: str = "auto") -> Instance:
    """Parse instance text.

    ``fmt`` is one of ``auto``, ``canonical``, ``ufllib`` (the simple format of
    the UflLib collection that distributes the KG files) or ``orlib``.  In
    ``auto`` mode a leading ``FILE:`` line selects ``ufllib``; otherwise the
    canonical layout is tried first, then OR-Library.  When nothing fits the
    error lists every attempted format.
    """
    if fmt != "auto":
        parsers = dict(_FORMATS)
        if fmt not in parsers:
            raise ValueError(f"unknown instance format {fmt!r}")
        return parsers[fmt](text, name)

    stripped = text.lstrip()
    if stripped[:5].upper().startswith("FILE"):
        return _parse_ufllib(text, name)
    tokens = _tokenize(text[:4096])
    if len(tokens) >= 2 and all(t.lstrip("-").isdigit() for t, _ in tokens[:2]):
        _check_header(int(tokens[0][0]), int(tokens[1][0]), tokens[0][1])
    errors = []
    for label, parser in _FORMATS:
        if label == "ufllib":
            continue
        try:
            return parser(text, name)
        except InstanceFormatError as exc:
            errors.append(f"{label}: {exc}")
    raise InstanceFormatError("unrecognised instance format; " + "; ".join(errors))


def write_instance(inst: Instance, out: TextIO | None = None) -> str:
    buf = io.StringIO() if out is None else out
    buf.write(f"{inst.m} {inst.n}\n")
    for i in range(inst.m):
        buf.write(" ".join(map(str, [int(inst.fixed[i]), *inst.costs[i].tolist()])))
        buf.write("\n")
    return buf.getvalue() if out is None else ""


def read_instance(path: str | Path, fmt: str = "auto") -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), name=path.stem, fmt=fmt)


def save_instance(inst: Instance, path: str | Path) -> None:
    with open(path, "w") as fh:
        write_instance(inst, fh)


# ---------------------------------------------------------------------------
# Generation


def generate_kg_instance(
    kg_class: KgClass | str,
    m: int,
    n: int,
    symmetric: bool = False,
    seed: int | np.random.SeedSequence | None = 0,
    name: str | None = None,
) -> Instance:
    """Random instance with Korkel-Ghosh cost distributions.

    Fixed costs are uniform integers over the class range, transportation
    costs uniform over [1000, 2000], both bounds inclusive.  A symmetric
    instance draws the upper triangle (diagonal included) and mirrors it.
    """
    kg_class = KgClass.parse(kg_class) if isinstance(kg_class, str) else kg_class
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1")
    if symmetric and m != n:
        raise ValueError("symmetric instances require m == n")
    rng = np.random.default_rng(seed)
    lo, hi = kg_class.fixed_range
    # Generator.integers samples bounded ranges without modulo bias
    fixed = rng.integers(lo, hi, size=m, endpoint=True, dtype=COST_DTYPE)
    tlo, thi = KG_TRANSPORT_RANGE
    if symmetric:
        iu = np.triu_indices(m)
        costs = np.zeros((m, n), dtype=COST_DTYPE)
        costs[iu] = rng.integers(tlo, thi, size=len(iu[0]), endpoint=True, dtype=COST_DTYPE)
        costs.T[iu] = costs[iu]
    else:
        costs = rng.integers(tlo, thi, size=(m, n), endpoint=True, dtype=COST_DTYPE)
    if name is None:
        name = f"g{'s' if symmetric else 'a'}{m}{kg_class.value}"
    return Instance(fixed, costs, name)


def instance_from_rows(rows: Iterable[Iterable[int]], name: str = "") -> Instance:
    """Build an instance from canonical rows ``[f_i, c_i1, ..., c_in]``."""
    arr = np.array([list(r) for r in rows], dtype=COST_DTYPE)
    return Instance(arr[:, 0], arr[:, 1:], name)
