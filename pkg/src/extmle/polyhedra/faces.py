"""Facial sets of the marginal cone and the MLE existence test.

A set of cells F is facial when some c gives (a_i, c) = 0 on F and
(a_i, c) < 0 off F.  Certificates form a cone, so the cells that can be
made strictly negative while the support stays at zero are found all at
once by a single LP:

    maximize  sum_i s_i
    s.t.      (A c)_i = 0            i in support
              (A c)_i + s_i <= 0     i not in support
              0 <= s_i <= 1

At an optimum s_i = min(1, -(A c)_i), and any cell that some certificate
could push below zero would raise the objective, so the cells with
s_i = 0 together with the support form the smallest facial set that
contains the support.  The equality block is eliminated first by writing
c = K y with K an integer basis of the kernel of A restricted to the
support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .. import exact
from ..design import DesignMatrix
from ..exact import Q
from ..tables import ContingencyTable
from .lp import LPStatus, RationalLP, solve_rational_lp


class FacialSetError(RuntimeError):
    """Internal inconsistency in a facial-set computation."""


@dataclass(frozen=True)
class FacialSet:
    cells: frozenset[int]
    certificate: tuple  # rationals, one per column of A
    n_cells: int

    @property
    def is_full(self) -> bool:
        return len(self.cells) == self.n_cells

    @property
    def complement(self) -> frozenset[int]:
        return frozenset(range(self.n_cells)) - self.cells

    def sorted_cells(self) -> list[int]:
        return sorted(self.cells)

    def certificate_strings(self) -> list[str]:
        return [rational_str(x) for x in self.certificate]


def rational_str(x) -> str:
    x = Q(x)
    if x.denominator == 1:
        return str(int(x.numerator))
    return f"{int(x.numerator)}/{int(x.denominator)}"


def certificate_values(design: DesignMatrix, certificate) -> list:
    """Exact values (a_i, c) for every cell."""
    nz = [(j, Q(v)) for j, v in enumerate(certificate) if v]
    return [sum((row[j] * v for j, v in nz if row[j]), Q(0)) for row in design.A.tolist()]


def verify_certificate(design: DesignMatrix, cells: Iterable[int], certificate) -> bool:
    cells = frozenset(cells)
    vals = certificate_values(design, certificate)
    return all((v == 0) if i in cells else (v < 0) for i, v in enumerate(vals))


def _embed(design: DesignMatrix, reduced_c) -> tuple:
    full = [Q(0)] * design.n_columns
    for j, v in zip(design.basis_columns, reduced_c):
        full[j] = Q(v)
    return tuple(full)


def facial_set(design: DesignMatrix, support: Iterable[int]) -> FacialSet:
    """Smallest facial set containing ``support``, with an exact certificate."""
    S = sorted(set(int(i) for i in support))
    I = design.n_cells
    if not S:
        raise ValueError("support must be nonempty")
    if S[0] < 0 or S[-1] >= I:
        raise ValueError("support references cells outside the table")
    zero_cert = (Q(0),) * design.n_columns
    if len(S) == I:
        return FacialSet(frozenset(range(I)), zero_cert, I)

    Ar = design.reduced
    r = Ar.shape[1]
    K = exact.nullspace(Ar[S], ncols=r)  # r-vectors c with A_S c = 0
    if not K:
        return FacialSet(frozenset(range(I)), zero_cert, I)
    K_cols = np.array(K, dtype=object).T  # r x k
    rest = [i for i in range(I) if i not in set(S)]
    M = Ar[rest].astype(object) @ K_cols  # |rest| x k integer matrix
    k, p = len(K), len(rest)

    objective = [0] * k + [1] * p
    A_ub = [list(M[row]) + [int(row == j) for j in range(p)] for row in range(p)]
    bounds = [(None, None)] * k + [(0, 1)] * p
    res = solve_rational_lp(RationalLP(objective, A_ub, [0] * p, bounds=bounds))
    if res.status is not LPStatus.OPTIMAL:
        raise FacialSetError(f"facial-set LP returned {res.status.value}")

    y = res.x[:k]
    c_red = [sum((Q(int(K[t][j])) * y[t] for t in range(k) if y[t]), Q(0)) for j in range(r)]
    cert = _embed(design, c_red)
    vals = certificate_values(design, cert)
    F = frozenset(i for i, v in enumerate(vals) if v == 0)
    if not set(S) <= F or any(v > 0 for v in vals):
        raise FacialSetError("certificate does not satisfy the facial-set conditions")
    if F == frozenset(range(I)):
        cert = zero_cert
    return FacialSet(F, cert, I)


def mle_exists(design: DesignMatrix, table: ContingencyTable) -> tuple[bool, FacialSet]:
    """MLE existence from the support of the table (scheme-independent).

    Returns the facial set of the support; it is proper exactly when the
    MLE does not exist, and its certificate then witnesses nonexistence.
    """
    support = table.support()
    if not support:
        raise ValueError("the table has no positive counts")
    F = facial_set(design, support)
    return F.is_full, F
