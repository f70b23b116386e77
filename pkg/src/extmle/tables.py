"""Contingency tables, factor grids and hierarchical model specifications.

Cells are ordered lexicographically with the last factor varying fastest
(C order).  Level indices are 0-based internally and 1-based in the
structured-text table documents, matching the usual way tables are
written down.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np


class TableFormatError(ValueError):
    """Raised for malformed or invalid table documents."""


class ModelSpecError(ValueError):
    """Raised for malformed generating-class strings."""


@dataclass(frozen=True)
class FactorGrid:
    factor_names: tuple[str, ...]
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.factor_names) != len(self.levels):
            raise TableFormatError("factor_names and levels differ in length")
        if not self.levels:
            raise TableFormatError("a grid needs at least one factor")
        if len(set(self.factor_names)) != len(self.factor_names):
            raise TableFormatError("duplicate factor names")
        for name, k in zip(self.factor_names, self.levels):
            if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 2:
                raise TableFormatError(f"factor {name!r} must have an integer number of levels >= 2")
        object.__setattr__(self, "levels", tuple(int(k) for k in self.levels))

    @classmethod
    def from_levels(cls, levels: Sequence[int], names: Sequence[str] | None = None) -> FactorGrid:
        if names is None:
            names = [str(j + 1) for j in range(len(levels))]
        return cls(tuple(names), tuple(levels))

    @property
    def n_factors(self) -> int:
        return len(self.levels)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.levels))

    def to_linear(self, multi: Sequence[int]) -> int:
        if len(multi) != self.n_factors:
            raise IndexError(f"multi-index {tuple(multi)} has wrong length")
        i = 0
        for x, k in zip(multi, self.levels):
            if not 0 <= x < k:
                raise IndexError(f"multi-index {tuple(multi)} out of range for levels {self.levels}")
            i = i * k + int(x)
        return i

    def to_multi(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.cell_count:
            raise IndexError(f"cell {i} out of range")
        out = []
        for k in reversed(self.levels):
            i, r = divmod(i, k)
            out.append(r)
        return tuple(reversed(out))

    def cells(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(k) for k in self.levels))

    def cell_matrix(self) -> np.ndarray:
        """I x K array of 0-based level indices, one row per cell."""
        return np.array(list(self.cells()), dtype=np.int64).reshape(self.cell_count, self.n_factors)


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    grid: FactorGrid
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if arr.ndim != 1 or arr.shape[0] != self.grid.cell_count:
            raise TableFormatError(
                f"expected {self.grid.cell_count} counts, got shape {arr.shape}")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise TableFormatError("counts must be integers")
        arr = arr.astype(np.int64)
        if np.any(arr < 0):
            raise TableFormatError("counts must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    def __eq__(self, other):
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.grid, self.counts.tobytes()))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.counts))

    def as_array(self) -> np.ndarray:
        return self.counts.reshape(self.grid.levels)


@dataclass(frozen=True)
class ModelSpec:
    """Hierarchical log-linear model given by its generating class.

    ``terms`` holds 0-based factor indices.  Construction normalizes the
    class: duplicate and dominated terms are dropped and the remaining
    terms are sorted, so equal models compare equal.
    """

    terms: tuple[frozenset[int], ...]
    n_factors: int = field(default=0)

    def __post_init__(self):
        terms = [frozenset(int(x) for x in t) for t in self.terms]
        if not terms:
            raise ModelSpecError("empty generating class")
        for t in terms:
            if not t:
                raise ModelSpecError("empty term in generating class")
            if self.n_factors and (min(t) < 0 or max(t) >= self.n_factors):
                raise ModelSpecError(f"term {sorted(t)} references an unknown factor")
        maximal = {t for t in terms if not any(t < u for u in terms)}
        ordered = tuple(sorted(maximal, key=lambda t: (sorted(t), len(t))))
        object.__setattr__(self, "terms", ordered)

    @property
    def saturated(self) -> bool:
        return bool(self.n_factors) and any(len(t) == self.n_factors for t in self.terms)

    def label(self, grid: FactorGrid | None = None) -> str:
        def name(j):
            if grid is None:
                return str(j + 1)
            return grid.factor_names[j]

        sep = "" if grid is None or all(len(n) == 1 for n in grid.factor_names) else " "
        return "".join("[" + sep.join(name(j) for j in sorted(t)) + "]" for t in self.terms)


# ------------------------------------------------------------------ #
# Parsing
# ------------------------------------------------------------------ #

_TERM_RE = re.compile(r"\[([^\[\]]*)\]")


def _resolve_label(token: str, grid: FactorGrid) -> int:
    if token in grid.factor_names:
        return grid.factor_names.index(token)
    if token.isdigit():
        j = int(token) - 1
        if 0 <= j < grid.n_factors:
            return j
    raise ModelSpecError(f"unknown factor label {token!r}")


def parse_model(spec: str, grid: FactorGrid) -> ModelSpec:
    """Parse a bracketed generating class such as ``"[12][13][23]"``.

    Inside a bracket, labels are separated by whitespace or commas; a
    bracket without separators is read one character per factor.  A label
    is either a factor name or a 1-based factor position.
    """
    if spec is None or not spec.strip():
        raise ModelSpecError("empty model specification")
    stripped = spec.strip()
    bodies = _TERM_RE.findall(stripped)
    if not bodies or _TERM_RE.sub("", stripped).strip():
        raise ModelSpecError(f"cannot parse model specification {spec!r}")
    terms = []
    for body in bodies:
        body = body.strip()
        if not body:
            raise ModelSpecError("empty term in generating class")
        if re.search(r"[\s,]", body):
            tokens = [tok for tok in re.split(r"[\s,]+", body) if tok]
        else:
            tokens = list(body)
        terms.append(frozenset(_resolve_label(tok, grid) for tok in tokens))
    return ModelSpec(tuple(terms), grid.n_factors)


def _as_int(value: Any, what: str) -> int:
    if isinstance(value, bool):
        raise TableFormatError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise TableFormatError(f"{what} must be an integer, got {value!r}")


def _grid_from_doc(doc: Mapping[str, Any]) -> FactorGrid:
    factors = doc.get("factors")
    if not isinstance(factors, list) or not factors:
        raise TableFormatError("document must declare a nonempty 'factors' list")
    names, levels = [], []
    for j, f in enumerate(factors):
        if not isinstance(f, Mapping) or "levels" not in f:
            raise TableFormatError(f"factor #{j + 1} needs a 'levels' entry")
        names.append(str(f.get("name", j + 1)))
        levels.append(_as_int(f["levels"], f"levels of factor {names[-1]!r}"))
    return FactorGrid(tuple(names), tuple(levels))


def parse_table(source: str | bytes | Mapping[str, Any]) -> ContingencyTable:
    """Build a validated table from a JSON document (text or parsed mapping)."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise TableFormatError(f"invalid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, Mapping):
        raise TableFormatError("table document must be an object")
    grid = _grid_from_doc(doc)
    has_dense, has_sparse = "counts" in doc, "cells" in doc
    if has_dense == has_sparse:
        raise TableFormatError("document needs exactly one of 'counts' or 'cells'")

    if has_dense:
        raw = doc["counts"]
        if not isinstance(raw, list):
            raise TableFormatError("'counts' must be a list")
        counts = [_as_int(v, f"count #{i}") for i, v in enumerate(raw)]
        if len(counts) != grid.cell_count:
            raise TableFormatError(f"expected {grid.cell_count} counts, got {len(counts)}")
    else:
        counts = [0] * grid.cell_count
        seen = set()
        for rec in doc["cells"]:
            if not isinstance(rec, Mapping) or "index" not in rec or "count" not in rec:
                raise TableFormatError("each cell record needs 'index' and 'count'")
            idx = rec["index"]
            if not isinstance(idx, list):
                raise TableFormatError("cell 'index' must be a list")
            multi = tuple(_as_int(x, "level index") - 1 for x in idx)
            try:
                i = grid.to_linear(multi)
            except IndexError as exc:
                raise TableFormatError(f"cell index {idx} out of range") from exc
            if i in seen:
                raise TableFormatError(f"duplicate cell record {idx}")
            seen.add(i)
            counts[i] = _as_int(rec["count"], f"count of cell {idx}")
    if any(c < 0 for c in counts):
        raise TableFormatError("counts must be nonnegative")
    return ContingencyTable(grid, np.array(counts, dtype=np.int64))


def serialize_table(table: ContingencyTable, sparse: bool = False) -> dict:
    doc: dict[str, Any] = {
        "factors": [{"name": n, "levels": k}
                    for n, k in zip(table.grid.factor_names, table.grid.levels)],
    }
    if sparse:
        doc["cells"] = [
            {"index": [int(x) + 1 for x in table.grid.to_multi(int(i))], "count": int(table.counts[i])}
            for i in np.flatnonzero(table.counts)
        ]
    else:
        doc["counts"] = [int(c) for c in table.counts]
    return doc


def load_table(path: str | Path) -> ContingencyTable:
    return parse_table(Path(path).read_text())


def table_from_zero_pattern(grid: FactorGrid, zeros: Iterable[Sequence[int]], fill: int = 1) -> ContingencyTable:
    """Table with ``fill`` everywhere except the listed 0-based cells."""
    counts = np.full(grid.cell_count, fill, dtype=np.int64)
    for multi in zeros:
        counts[grid.to_linear(multi)] = 0
    return ContingencyTable(grid, counts)
