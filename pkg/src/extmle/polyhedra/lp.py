"""Exact two-phase simplex over the rationals with Bland's rule."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from ..exact import Q


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


@dataclass
class RationalLP:
    """maximize ``objective @ x`` subject to

    ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and ``lo <= x <= hi`` per
    entry of ``bounds`` (``None`` for an infinite bound; default ``(0, None)``).
    """

    objective: Sequence
    A_ub: Sequence[Sequence] = ()
    b_ub: Sequence = ()
    A_eq: Sequence[Sequence] = ()
    b_eq: Sequence = ()
    bounds: Sequence[tuple] | None = None

    def __post_init__(self):
        n = len(self.objective)
        for name, rows, rhs in (("A_ub", self.A_ub, self.b_ub), ("A_eq", self.A_eq, self.b_eq)):
            if len(rows) != len(rhs):
                raise ValueError(f"{name} and its right-hand side differ in length")
            if any(len(r) != n for r in rows):
                raise ValueError(f"{name} rows must have {n} entries")
        if self.bounds is not None and len(self.bounds) != n:
            raise ValueError("need one bound pair per variable")


@dataclass
class LPResult:
    status: LPStatus
    x: list | None = None
    value: object = None
    pivots: int = 0


class _Tableau:
    """Dense rows with sparse pivot updates; last entry of each row is the rhs."""

    def __init__(self, rows, basis, ncols):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols
        self.pivots = 0

    def set_objective(self, cost):
        obj = list(cost) + [Q(0)]
        for r, b in zip(self.rows, self.basis):
            cb = cost[b]
            if cb:
                obj = [o - cb * x for o, x in zip(obj, r)]
        self.obj = obj

    def pivot(self, r, c):
        row = self.rows[r]
        piv = row[c]
        if piv != 1:
            row = [x / piv for x in row]
            self.rows[r] = row
        nz = [j for j, x in enumerate(row) if x]
        for i, other in enumerate(self.rows):
            if i != r:
                f = other[c]
                if f:
                    for j in nz:
                        other[j] -= f * row[j]
        f = self.obj[c]
        if f:
            for j in nz:
                self.obj[j] -= f * row[j]
        self.basis[r] = c
        self.pivots += 1

    def run(self, allowed) -> LPStatus:
        while True:
            enter = next((j for j in allowed if self.obj[j] > 0), None)
            if enter is None:
                return LPStatus.OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return LPStatus.UNBOUNDED
            self.pivot(best[1], enter)


def solve_rational_lp(lp: RationalLP) -> LPResult:
    n = len(lp.objective)
    bounds = list(lp.bounds) if lp.bounds is not None else [(0, None)] * n

    # x_j = offset_j + sum(coef * z_col) over its standard-form columns
    var_map: list[tuple[object, list[tuple[int, int]]]] = []
    ncols = 0
    extra_ub: list[tuple[dict, object]] = []
    for lo, hi in bounds:
        lo = None if lo is None else Q(lo)
        hi = None if hi is None else Q(hi)
        if lo is not None and hi is not None and hi < lo:
            return LPResult(LPStatus.INFEASIBLE)
        if lo is not None:
            var_map.append((lo, [(ncols, 1)]))
            if hi is not None:
                extra_ub.append(({ncols: Q(1)}, hi - lo))
            ncols += 1
        elif hi is not None:
            var_map.append((hi, [(ncols, -1)]))
            ncols += 1
        else:
            var_map.append((Q(0), [(ncols, 1), (ncols + 1, -1)]))
            ncols += 2

    def substitute(coeffs, rhs):
        row = {}
        rhs = Q(rhs)
        for j, a in enumerate(coeffs):
            a = Q(a)
            if not a:
                continue
            off, cols = var_map[j]
            rhs -= a * off
            for c, s in cols:
                row[c] = row.get(c, Q(0)) + s * a
        return row, rhs

    constraints = []  # (row dict, rhs, kind)
    for coeffs, b in zip(lp.A_ub, lp.b_ub):
        constraints.append((*substitute(coeffs, b), "ub"))
    for row, b in extra_ub:
        constraints.append((row, b, "ub"))
    for coeffs, b in zip(lp.A_eq, lp.b_eq):
        constraints.append((*substitute(coeffs, b), "eq"))

    n_slack = sum(1 for c in constraints if c[2] == "ub")
    n_struct = ncols
    width = n_struct + n_slack
    rows, basis, needs_art = [], [], []
    slack = n_struct
    for row, rhs, kind in constraints:
        dense = [Q(0)] * width
        for c, a in row.items():
            dense[c] = a
        sign = 1
        if kind == "ub":
            dense[slack] = Q(1)
            slack_col = slack
            slack += 1
        else:
            slack_col = None
        if rhs < 0:
            dense = [-x for x in dense]
            rhs = -rhs
            sign = -1
        rows.append(dense + [rhs])
        if slack_col is not None and sign == 1:
            basis.append(slack_col)
            needs_art.append(False)
        else:
            basis.append(None)
            needs_art.append(True)

    n_art = sum(needs_art)
    total = width + n_art
    art = width
    for i, need in enumerate(needs_art):
        rhs = rows[i].pop()
        rows[i].extend([Q(0)] * n_art)
        if need:
            rows[i][art] = Q(1)
            basis[i] = art
            art += 1
        rows[i].append(rhs)

    tab = _Tableau(rows, basis, total)
    if n_art:
        tab.set_objective([Q(0)] * width + [Q(-1)] * n_art)
        tab.run(range(total))
        if tab.obj[-1] != 0:
            return LPResult(LPStatus.INFEASIBLE, pivots=tab.pivots)
        # drive artificials out of the basis; drop redundant rows
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] >= width:
                c = next((j for j in range(width) if tab.rows[i][j]), None)
                if c is None:
                    del tab.rows[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, c)
            i += 1
        for r in tab.rows:
            del r[width:total]
        tab.ncols = width

    cost = [Q(0)] * width
    const = Q(0)
    for j, a in enumerate(lp.objective):
        a = Q(a)
        off, cols = var_map[j]
        const += a * off
        for c, s in cols:
            cost[c] += s * a
    tab.set_objective(cost)
    status = tab.run(range(width))
    if status is LPStatus.UNBOUNDED:
        return LPResult(LPStatus.UNBOUNDED, pivots=tab.pivots)

    z = [Q(0)] * width
    for r, b in zip(tab.rows, tab.basis):
        z[b] = r[-1]
    x = []
    for off, cols in var_map:
        x.append(off + sum((s * z[c] for c, s in cols), Q(0)))
    value = sum((Q(a) * xi for a, xi in zip(lp.objective, x)), Q(0))
    assert value == const - tab.obj[-1]
    return LPResult(LPStatus.OPTIMAL, x, value, tab.pivots)
