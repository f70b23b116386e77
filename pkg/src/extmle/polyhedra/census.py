"""Facet enumeration of the marginal cone by double description.

Facets of cone(rows of A) are the extreme rays of the polar cone
{c : A c <= 0}.  Working with the full-column-rank reduction of A makes
the polar cone pointed.  Rays are stored through their slack vectors
s = A c (one entry per cell), which are closed under the positive
combinations the method forms, so every constraint value is always at
hand.  Constraints are inserted in cell order after an initial simplicial
cone built from the first independent rows; adjacency uses the
combinatorial test on zero sets (kept as integer bitmasks).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import reduce
from math import gcd

import numpy as np

from .. import exact
from ..design import DesignMatrix
from ..exact import Q
from .faces import FacialSet, _embed

log = logging.getLogger(__name__)


@dataclass
class FacetCensus:
    facets: list[FacialSet]
    zero_margin: list[bool]
    rank: int
    complete: bool = True
    elapsed: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def zero_margin_count(self) -> int:
        return sum(self.zero_margin)


def _normalize(s):
    g = reduce(gcd, (abs(x) for x in s if x), 0)
    return tuple(x // g for x in s) if g > 1 else tuple(s)


def _initial_cone(Ar: np.ndarray):
    r = Ar.shape[1]
    basis_rows = exact.row_basis(Ar)
    assert len(basis_rows) == r
    AB = [[int(x) for x in Ar[i]] for i in basis_rows]
    aug = [row + [int(j == k) for k in range(r)] for j, row in enumerate(AB)]
    R, piv = exact.rref(aug, ncols=r)
    inv = [row[r:] for row in R]  # (A_B)^{-1}
    rays = []
    for k in range(r):
        c = [-inv[j][k] for j in range(r)]
        s = exact.matvec([[Q(int(x)) for x in row] for row in Ar.tolist()], c)
        rays.append(_normalize(exact.primitive(s)))
    return basis_rows, AB, rays


def enumerate_facets(design: DesignMatrix, budget_secs: float | None = None) -> FacetCensus:
    """All facets of the marginal cone, as facial sets with certificates.

    With a time budget, an exhausted run returns ``complete=False`` and
    only those current rays that already satisfy every constraint; those
    are guaranteed facets, but the list is not exhaustive.
    """
    t0 = time.perf_counter()
    Ar = design.reduced
    I, r = Ar.shape
    basis_rows, AB, rays = _initial_cone(Ar)
    processed = set(basis_rows)
    masks = []
    for s in rays:
        masks.append(sum(1 << i for i in basis_rows if s[i] == 0))
    order = [i for i in range(I) if i not in processed]
    peak = len(rays)
    complete = True
    deadline = None if budget_secs is None else t0 + budget_secs

    for step, k in enumerate(order):
        if deadline is not None and time.perf_counter() > deadline:
            complete = False
            break
        pos = [j for j, s in enumerate(rays) if s[k] > 0]
        neg = [j for j, s in enumerate(rays) if s[k] < 0]
        zer = [j for j, s in enumerate(rays) if s[k] == 0]
        new_rays = [rays[j] for j in neg] + [rays[j] for j in zer]
        new_masks = [masks[j] for j in neg] + [masks[j] | (1 << k) for j in zer]
        if pos and neg:
            need = r - 2
            all_masks = masks
            for p in pos:
                if deadline is not None and time.perf_counter() > deadline:
                    complete = False
                    break
                sp, zp = rays[p], masks[p]
                for n in neg:
                    common = zp & masks[n]
                    if common.bit_count() < need:
                        continue
                    hits = 0
                    for zq in all_masks:
                        if zq & common == common:
                            hits += 1
                            if hits > 2:
                                break
                    if hits > 2:
                        continue
                    sn = rays[n]
                    a, b = -sn[k], sp[k]
                    new_rays.append(_normalize([a * x + b * y for x, y in zip(sp, sn)]))
                    new_masks.append(common | (1 << k))
        if not complete:
            break  # drop the unfinished step
        rays, masks = new_rays, new_masks
        processed.add(k)
        peak = max(peak, len(rays))
        log.debug("step %d/%d (cell %d): %d rays", step + 1, len(order), k, len(rays))

    if not complete:
        rays = [s for s in rays if all(x <= 0 for x in s)]

    facets = []
    for s in rays:
        c_red = exact.solve(AB, [Q(s[i]) for i in basis_rows])
        cells = frozenset(i for i, x in enumerate(s) if x == 0)
        facets.append(FacialSet(cells, _embed(design, c_red), I))
    facets.sort(key=lambda f: f.sorted_cells())
    return _finish(design, facets, r, complete, t0, {"peak_rays": peak})


def _finish(design, facets, r, complete, t0, stats) -> FacetCensus:
    zero_sets = {design.column_zero_set(j) for j in range(design.n_columns)}
    flags = [f.cells in zero_sets for f in facets]
    return FacetCensus(facets, flags, r, complete, time.perf_counter() - t0, stats)
