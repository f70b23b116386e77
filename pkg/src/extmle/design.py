"""Design matrices, sampling schemes and the reduced (minimal) design block."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import exact
from .exact import Q
from .tables import ContingencyTable, FactorGrid, ModelSpec

log = logging.getLogger(__name__)


class SchemeError(ValueError):
    """Sampling scheme inconsistent with the table or the model."""


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """0/1 indicator design: one column per (term, marginal cell)."""

    grid: FactorGrid
    model: ModelSpec
    A: np.ndarray
    labels: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    rank: int

    @property
    def n_cells(self) -> int:
        return self.A.shape[0]

    @property
    def n_columns(self) -> int:
        return self.A.shape[1]

    @cached_property
    def basis_columns(self) -> tuple[int, ...]:
        """First independent columns of A; A restricted to them has full column rank."""
        return tuple(exact.column_basis(self.A))

    @cached_property
    def reduced(self) -> np.ndarray:
        return self.A[:, list(self.basis_columns)]

    def rows(self, cells: Sequence[int]) -> np.ndarray:
        return self.A[np.asarray(sorted(cells), dtype=np.int64)]

    def rank_of(self, cells) -> int:
        """Exact rank of the submatrix A_F."""
        cells = sorted(cells)
        if not cells:
            return 0
        return exact.rank(self.A[cells])

    def column_support(self, j: int) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.A[:, j]))

    def column_zero_set(self, j: int) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.A[:, j] == 0))


def build_design_matrix(grid: FactorGrid, model: ModelSpec) -> DesignMatrix:
    if model.n_factors and model.n_factors != grid.n_factors:
        raise ValueError("model and grid disagree on the number of factors")
    for t in model.terms:
        if max(t) >= grid.n_factors:
            raise ValueError(f"term {sorted(t)} references an unknown factor")
    cells = grid.cell_matrix()
    blocks, labels = [], []
    for term in model.terms:
        factors = sorted(term)
        sub = FactorGrid.from_levels([grid.levels[f] for f in factors]) if len(factors) > 1 else None
        k = int(np.prod([grid.levels[f] for f in factors]))
        if sub is None:
            margin_index = cells[:, factors[0]]
        else:
            margin_index = np.ravel_multi_index(cells[:, factors].T, sub.levels)
        block = np.zeros((grid.cell_count, k), dtype=np.int64)
        block[np.arange(grid.cell_count), margin_index] = 1
        blocks.append(block)
        for m in range(k):
            multi = np.unravel_index(m, [grid.levels[f] for f in factors])
            labels.append((tuple(factors), tuple(int(x) for x in multi)))
    A = np.hstack(blocks)
    A.setflags(write=False)
    r = exact.rank(A)
    log.debug("design %s on %s: %d x %d, rank %d", model.label(), grid.levels, *A.shape, r)
    return DesignMatrix(grid, model, A, tuple(labels), r)


def sufficient_statistics(design: DesignMatrix, table: ContingencyTable) -> np.ndarray:
    """Margins A^T n (exact integers)."""
    if table.counts.shape[0] != design.n_cells:
        raise ValueError("table and design disagree on the number of cells")
    return design.A.T @ table.counts


# ------------------------------------------------------------------ #
# Sampling schemes
# ------------------------------------------------------------------ #

POISSON = "poisson"
MULTINOMIAL = "multinomial"
PRODUCT_MULTINOMIAL = "product-multinomial"
POISSON_MULTINOMIAL = "poisson-multinomial"


@dataclass(frozen=True)
class SamplingScheme:
    """Conditional Poisson sampling scheme.

    ``blocks`` partitions the cells; ``totals[j]`` is the fixed count of
    block j.  For the Poisson-multinomial scheme the last block is free,
    so it carries no total.  A multinomial scheme with ``blocks=None``
    means a single block of all cells.
    """

    kind: str
    blocks: tuple[frozenset[int], ...] | None = None
    totals: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in (POISSON, MULTINOMIAL, PRODUCT_MULTINOMIAL, POISSON_MULTINOMIAL):
            raise SchemeError(f"unknown sampling scheme {self.kind!r}")
        if self.blocks is not None:
            blocks = tuple(frozenset(int(i) for i in b) for b in self.blocks)
            object.__setattr__(self, "blocks", blocks)
            if any(not b for b in blocks):
                raise SchemeError("partition blocks must be nonempty")
            seen: set[int] = set()
            for b in blocks:
                if seen & b:
                    raise SchemeError("partition blocks overlap")
                seen |= b
        object.__setattr__(self, "totals", tuple(int(t) for t in self.totals))
        if any(t < 1 for t in self.totals):
            raise SchemeError("block totals must be >= 1")
        if self.kind == POISSON and (self.blocks or self.totals):
            raise SchemeError("the Poisson scheme has no constraints")
        if self.kind == MULTINOMIAL and len(self.totals) != 1:
            raise SchemeError("the multinomial scheme needs exactly one total")
        if self.kind == PRODUCT_MULTINOMIAL:
            if not self.blocks or len(self.blocks) != len(self.totals):
                raise SchemeError("product multinomial needs one total per block")
        if self.kind == POISSON_MULTINOMIAL:
            if not self.blocks or len(self.blocks) != len(self.totals) + 1:
                raise SchemeError("Poisson-multinomial needs totals for all but the last block")

    @classmethod
    def poisson(cls) -> SamplingScheme:
        return cls(POISSON)

    @classmethod
    def multinomial(cls, total: int) -> SamplingScheme:
        return cls(MULTINOMIAL, None, (total,))

    @classmethod
    def product_multinomial(cls, blocks, totals) -> SamplingScheme:
        return cls(PRODUCT_MULTINOMIAL, tuple(blocks), tuple(totals))

    @classmethod
    def poisson_multinomial(cls, blocks, totals) -> SamplingScheme:
        return cls(POISSON_MULTINOMIAL, tuple(blocks), tuple(totals))

    @classmethod
    def by_factor(cls, table: ContingencyTable, factor: int | str) -> SamplingScheme:
        """Product multinomial with one block per level of ``factor``,
        totals taken from the observed table."""
        grid = table.grid
        if isinstance(factor, str):
            if factor in grid.factor_names:
                factor = grid.factor_names.index(factor)
            elif factor.isdigit() and 1 <= int(factor) <= grid.n_factors:
                factor = int(factor) - 1
            else:
                raise SchemeError(f"unknown factor label {factor!r}")
        levels = grid.cell_matrix()[:, factor]
        blocks = [frozenset(int(i) for i in np.flatnonzero(levels == k)) for k in range(grid.levels[factor])]
        totals = [int(table.counts[sorted(b)].sum()) for b in blocks]
        return cls.product_multinomial(blocks, totals)

    @property
    def n_constraints(self) -> int:
        return len(self.totals)

    def constrained_blocks(self, n_cells: int) -> list[frozenset[int]]:
        if self.kind == POISSON:
            return []
        if self.kind == MULTINOMIAL and self.blocks is None:
            return [frozenset(range(n_cells))]
        return list(self.blocks[: len(self.totals)])


@dataclass(frozen=True, eq=False)
class SamplingMatrix:
    V: np.ndarray
    indicators: np.ndarray
    totals: tuple[int, ...]
    blocks: tuple[frozenset[int], ...]

    @property
    def m(self) -> int:
        return self.V.shape[1]


def build_sampling_matrix(scheme: SamplingScheme, grid: FactorGrid, table: ContingencyTable,
                          design: DesignMatrix | None = None) -> SamplingMatrix:
    I = grid.cell_count
    blocks = scheme.constrained_blocks(I)
    if scheme.blocks is not None:
        covered = frozenset().union(*scheme.blocks)
        if any(i >= I for i in covered):
            raise SchemeError("partition references cells outside the grid")
        if scheme.kind == PRODUCT_MULTINOMIAL and len(covered) != I:
            raise SchemeError("product multinomial blocks must cover every cell")
    chi = np.zeros((I, len(blocks)), dtype=np.int64)
    for j, b in enumerate(blocks):
        chi[sorted(b), j] = 1
    observed = chi.T @ table.counts
    for j, (obs, N) in enumerate(zip(observed, scheme.totals)):
        if int(obs) != N:
            raise SchemeError(f"block {j + 1} total is {int(obs)}, scheme says {N}")
    V = chi / np.array(scheme.totals, dtype=float) if blocks else np.zeros((I, 0))
    if design is not None:
        check_nested(design, chi)
    chi.setflags(write=False)
    V.setflags(write=False)
    return SamplingMatrix(V, chi, tuple(scheme.totals), tuple(blocks))


def check_nested(design: DesignMatrix, indicators: np.ndarray) -> None:
    """Raise unless every block indicator lies in the column span of A."""
    if indicators.shape[1] == 0:
        return
    if exact.rank(np.hstack([design.A, indicators])) != design.rank:
        raise SchemeError("sampling subspace is not contained in the log-linear subspace "
                          "(the model must include every block indicator)")


@dataclass(frozen=True, eq=False)
class ReducedBlock:
    """Orthonormal basis of the log-linear subspace minus the sampling subspace."""

    B: np.ndarray
    exact_basis: list | None = field(default=None, repr=False)

    @property
    def width(self) -> int:
        return self.B.shape[1]


def _exact_orthogonal_complement(columns: list[list], against: list[list]) -> list[list]:
    """Exact Gram-Schmidt of ``columns`` after ``against`` (kept, not returned)."""
    basis = [list(map(Q, v)) for v in against]
    norms = [sum(x * x for x in v) for v in basis]
    out = []
    for col in columns:
        w = list(map(Q, col))
        for b, nb in zip(basis, norms):
            dot = sum((x * y for x, y in zip(w, b) if y), Q(0))
            if dot:
                f = dot / nb
                w = [x - f * y for x, y in zip(w, b)]
        nw = sum(x * x for x in w)
        if nw:
            basis.append(w)
            norms.append(nw)
            out.append(w)
    return out


def reduce_to_minimal(design: DesignMatrix, V: SamplingMatrix, exact_limit: int = 4000) -> ReducedBlock:
    """Orthonormal basis B of span(A) minus span(V), so that span(B V) = span(A).

    Uses exact rational Gram-Schmidt when ``I * rank(A)`` is at most
    ``exact_limit`` and floating-point SVD otherwise.
    """
    check_nested(design, V.indicators)
    A = design.A
    I, r, m = A.shape[0], design.rank, V.m
    if I * r <= exact_limit:
        cols = exact.column_basis(A)
        ortho = _exact_orthogonal_complement(
            [A[:, j].tolist() for j in cols], [V.indicators[:, j].tolist() for j in range(m)])
        if len(ortho) != r - m:
            raise SchemeError("sampling constraints are not independent within the model")
        B = np.column_stack([np.array([float(x) for x in w]) for w in ortho]) if ortho else np.zeros((I, 0))
        B /= np.linalg.norm(B, axis=0) if ortho else 1.0
        log.debug("reduced block computed exactly, width %d", r - m)
        return ReducedBlock(B, ortho)
    log.debug("reduced block via floating-point SVD (I*rank=%d)", I * r)
    return ReducedBlock(orthonormal_complement(A.astype(float), V.V, r - m))


def orthonormal_complement(A: np.ndarray, V: np.ndarray, width: int) -> np.ndarray:
    """Orthonormal basis (``width`` columns) of span(A) with span(V) projected out.

    ``width`` is decided exactly by the caller; SVD only supplies the vectors.
    """
    if V.shape[1]:
        q, _ = np.linalg.qr(V)
        A = A - q @ (q.T @ A)
    if width == 0:
        return np.zeros((A.shape[0], 0))
    u, _, _ = np.linalg.svd(A, full_matrices=False)
    return u[:, :width]
