"""Published KG reference values and solutions shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

BEST_KNOWN_SOURCES = ("appendix-a", "table2-best")


def _read(name: str) -> list[list[str]]:
    text = resources.files(__package__).joinpath("data", name).read_text()
    return [ln.split("\t") for ln in text.splitlines() if ln and not ln.startswith("#")]


def reference_values(sources: tuple[str, ...] | None = BEST_KNOWN_SOURCES) -> dict[str, int]:
    """Instance name -> value, restricted to rows tagged with ``sources``."""
    out = {}
    for name, value, source in _read("reference_values.tsv"):
        if sources is None or source in sources:
            out[name] = int(value)
    return out


def reference_solutions() -> dict[str, tuple[int, list[int]]]:
    """Instance name -> (value, 0-based open sites)."""
    return {
        name: (int(value), [int(s) - 1 for s in sites.split()])
        for name, value, _source, sites in _read("reference_solutions.tsv")
    }


def load_reference_file(path: str | Path, source: str | None = None) -> dict[str, int]:
    """Read ``name<TAB>value[<TAB>source]`` lines; ``builtin`` selects the shipped table."""
    if str(path) == "builtin":
        return reference_values((source,) if source else BEST_KNOWN_SOURCES)
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected 'name<TAB>value'")
        if source and len(parts) > 2 and parts[2] != source:
            continue
        try:
            out[parts[0]] = int(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-integer value {parts[1]!r}") from None
    return out
