"""Exact linear algebra over the rationals and integers.

Matrices are plain lists of rows.  Entries may be Python ints, fractions
or gmpy2 rationals; results are ``mpq`` (or ``int`` where stated).
Nothing here touches floating point.
"""

from __future__ import annotations

from functools import reduce
from math import gcd
from typing import Sequence

import numpy as np

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q


Matrix = list[list]


def as_rational(M) -> Matrix:
    if isinstance(M, np.ndarray):
        if not np.issubdtype(M.dtype, np.integer):
            raise TypeError("exact routines need an integer numpy array")
        return [[Q(int(x)) for x in row] for row in M.tolist()]
    return [[Q(x) for x in row] for row in M]


def transpose(M: Matrix) -> Matrix:
    return [list(col) for col in zip(*M)] if M else []


def rref(M, ncols: int | None = None) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    R = as_rational(M)
    if not R:
        return R, []
    n = len(R[0]) if ncols is None else ncols
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(R)) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        piv = R[r][c]
        if piv != 1:
            R[r] = [x / piv for x in R[r]]
        row = R[r]
        for i in range(len(R)):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], row)]
        pivots.append(c)
        r += 1
        if r == len(R):
            break
    return R, pivots


def rank(M) -> int:
    if isinstance(M, np.ndarray) and M.size == 0:
        return 0
    if not len(M):
        return 0
    return len(rref(M)[1])


def column_basis(M) -> list[int]:
    """Indices of the first linearly independent columns, in order."""
    return rref(M)[1]


def row_basis(M) -> list[int]:
    """Indices of the first linearly independent rows, greedy in row order."""
    rows = as_rational(M)
    if not rows:
        return []
    return rref(transpose(rows))[1]


def primitive(v: Sequence) -> list[int]:
    """Scale a rational vector to the primitive integer vector on its ray."""
    v = [Q(x) for x in v]
    den = reduce(lambda a, b: a * b // gcd(a, b), (int(x.denominator) for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, (abs(x) for x in ints), 0)
    return [x // g for x in ints] if g > 1 else ints


def nullspace(M, ncols: int | None = None) -> list[list[int]]:
    """Basis of {x : Mx = 0} as primitive integer vectors (a Q-basis)."""
    n = ncols if ncols is not None else (len(M[0]) if len(M) else 0)
    if not len(M):
        return [[int(i == j) for i in range(n)] for j in range(n)]
    R, pivots = rref(M, ncols=n)
    free = [j for j in range(n) if j not in set(pivots)]
    basis = []
    for f in free:
        v = [Q(0)] * n
        v[f] = Q(1)
        for r, p in enumerate(pivots):
            v[p] = -R[r][f]
        basis.append(primitive(v))
    return basis


def solve(M, b) -> list:
    """Solve a square nonsingular system exactly."""
    n = len(M)
    aug = [list(row) + [bi] for row, bi in zip(as_rational(M), b)]
    R, pivots = rref(aug, ncols=n)
    if pivots != list(range(n)):
        raise np.linalg.LinAlgError("singular system")
    return [R[i][n] for i in range(n)]


def matvec(M: Matrix, x: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, x) if a), Q(0)) for row in M]


def integer_kernel_basis(M) -> list[list[int]]:
    """Lattice basis of {x in Z^n : Mx = 0} for an integer matrix ``M`` (p x n).

    Unimodular column operations reduce ``M`` to column echelon form while
    the same operations are applied to an identity block; the identity
    parts of the columns whose ``M`` part vanishes span the integer kernel.
    """
    M = np.asarray(M)
    p, n = M.shape
    cols = [[int(M[r, c]) for r in range(p)] + [int(c == k) for k in range(n)] for c in range(n)]
    k = 0
    for r in range(p):
        while True:
            live = [c for c in range(k, n) if cols[c][r] != 0]
            if not live:
                break
            j = min(live, key=lambda c: abs(cols[c][r]))
            cols[k], cols[j] = cols[j], cols[k]
            piv = cols[k][r]
            done = True
            for c in range(k + 1, n):
                if cols[c][r]:
                    q = cols[c][r] // piv
                    cols[c] = [a - q * b for a, b in zip(cols[c], cols[k])]
                    if cols[c][r]:
                        done = False
            if done:
                k += 1
                break
        if k == n:
            break
    return [col[p:] for col in cols[k:]]
