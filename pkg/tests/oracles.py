"""Independent reference computations (floating LPs, brute force, closed forms).

Nothing here uses the package's exact LP, double description or fitting
code; only tables and design-matrix construction are shared.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import sympy
from scipy.optimize import linprog

from extmle.design import build_design_matrix
from extmle.tables import ContingencyTable, FactorGrid, ModelSpec


def fiber_facial_set(A: np.ndarray, support) -> frozenset[int]:
    """Cells that can be positive in some x >= 0 with A^T x = A^T 1_S.

    The relative interior of the face containing t = A^T 1_S is hit by a
    fiber point whose support is exactly the facial set of S.
    """
    I = A.shape[0]
    x0 = np.zeros(I)
    x0[list(support)] = 1.0
    t = A.T @ x0
    out = set(support)
    for i in range(I):
        if i in out:
            continue
        c = np.zeros(I)
        c[i] = -1.0
        res = linprog(c, A_eq=A.T, b_eq=t, bounds=(0, None), method="highs")
        if res.status == 0 and -res.fun > 1e-7:
            out.add(i)
    return frozenset(out)


def is_facial_lp(A: np.ndarray, F) -> bool:
    """Some c with A_F c = 0 and A_i c <= -1 off F (scaling is free)."""
    I, d = A.shape
    F = sorted(F)
    off = [i for i in range(I) if i not in set(F)]
    if not off:
        return True
    res = linprog(np.zeros(d), A_ub=A[off], b_ub=-np.ones(len(off)),
                  A_eq=A[F] if F else None, b_eq=np.zeros(len(F)) if F else None,
                  bounds=(None, None), method="highs")
    return res.status == 0


@lru_cache(maxsize=None)
def _all_facial_sets(A_bytes: bytes, shape: tuple[int, int]) -> tuple[frozenset[int], ...]:
    A = np.frombuffer(A_bytes, dtype=np.int64).reshape(shape).astype(float)
    I = shape[0]
    faces = []
    for k in range(I + 1):
        for F in itertools.combinations(range(I), k):
            if is_facial_lp(A, F):
                faces.append(frozenset(F))
    return tuple(faces)


def all_facial_sets(A: np.ndarray) -> tuple[frozenset[int], ...]:
    """Every facial set, by testing all 2^I subsets."""
    A = np.ascontiguousarray(A, dtype=np.int64)
    return _all_facial_sets(A.tobytes(), A.shape)


def subset_facial_set(A: np.ndarray, support) -> frozenset[int]:
    """Smallest facial set containing the support, by subset enumeration."""
    S = frozenset(support)
    return min((F for F in all_facial_sets(A) if S <= F), key=len)


def brute_facets(A: np.ndarray) -> list[frozenset[int]]:
    """Facial sets whose rows span a subspace of codimension one."""
    r = np.linalg.matrix_rank(A)
    return [F for F in all_facial_sets(A)
            if F and np.linalg.matrix_rank(A[sorted(F)]) == r - 1]


def sympy_rank(M) -> int:
    return sympy.Matrix(np.asarray(M, dtype=np.int64).tolist()).rank()


def independence_mle(counts2d) -> np.ndarray:
    n = np.asarray(counts2d, dtype=float)
    return np.outer(n.sum(1), n.sum(0)) / n.sum()


def g2_direct(n, m) -> float:
    total = 0.0
    for a, b in zip(n, m):
        if a > 0:
            total += 2 * a * np.log(a / b)
    return total


def x2_direct(n, m) -> float:
    return sum((a - b) ** 2 / b for a, b in zip(n, m) if b > 0)


# ------------------------------------------------------------------ #
# Model enumeration helpers
# ------------------------------------------------------------------ #

def hierarchical_models(k: int, include_saturated: bool = True) -> list[ModelSpec]:
    """All generating classes on k factors that mention every factor."""
    return list(_hierarchical_models(k, include_saturated))


@lru_cache(maxsize=None)
def _hierarchical_models(k, include_saturated):
    subsets = [frozenset(c) for r in range(1, k + 1) for c in itertools.combinations(range(k), r)]
    out = set()
    for r in range(1, len(subsets) + 1):
        for combo in itertools.combinations(subsets, r):
            if any(a < b for a in combo for b in combo):
                continue
            if frozenset().union(*combo) != frozenset(range(k)):
                continue
            spec = ModelSpec(combo, k)
            if spec.saturated and not include_saturated:
                continue
            out.add(spec.terms)
    return tuple(ModelSpec(t, k) for t in sorted(out, key=lambda ts: [sorted(x) for x in ts]))


def small_grids(max_cells: int) -> list[tuple[int, ...]]:
    grids = []
    for k in (2, 3):
        for levels in itertools.combinations_with_replacement(range(2, 7), k):
            if int(np.prod(levels)) <= max_cells:
                grids.append(levels)
    return grids


def design_for(levels, model: ModelSpec):
    return build_design_matrix(FactorGrid.from_levels(levels), model)


def random_case(rng: np.random.Generator, max_cells: int = 81, saturated: bool = False):
    """A random (table, design) pair: grid, non-saturated model, sparse Poisson counts."""
    while True:
        k = int(rng.integers(2, 5))
        levels = tuple(int(x) for x in rng.integers(2, 5, size=k))
        if np.prod(levels) <= max_cells:
            break
    models = hierarchical_models(k, include_saturated=saturated)
    model = models[int(rng.integers(len(models)))]
    grid = FactorGrid.from_levels(levels)
    lam = rng.uniform(0.3, 6.0)
    while True:
        counts = rng.poisson(lam * rng.uniform(0.2, 1.8, size=grid.cell_count))
        if counts.any():
            break
    return ContingencyTable(grid, counts), build_design_matrix(grid, model)


def superset_facial_set(A: np.ndarray, support) -> frozenset[int]:
    """Smallest facial superset of the support, scanning supersets by size.

    Facial sets are closed under intersection, so the first facial
    superset found at the smallest size is the unique minimal one.
    """
    A = np.asarray(A, dtype=float)
    S = frozenset(support)
    rest = [i for i in range(A.shape[0]) if i not in S]
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            F = S | frozenset(extra)
            if is_facial_lp(A, F):
                return F
    raise AssertionError("the full cell set is always facial")
