"""Inference after an extended fit: estimability, degrees of freedom,
goodness of fit and the binomial (toric) checks on the fitted means."""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from . import exact
from .design import DesignMatrix, SamplingMatrix
from .fitting import ExtendedFit, face_basis, moment_residual
from .polyhedra import FacialSet
from .tables import ContingencyTable

VERIFIED = "VERIFIED"
FAILED = "FAILED"
CHI2_NOT_APPLICABLE = "saturated on facial set, chi-square not applicable"


@dataclass
class EstimabilityReport:
    facial_set: FacialSet
    rank_face: int  # rank(A_F)
    m: int
    basis: np.ndarray  # I x (rank_face - m), zero off F
    normal_dimension: int  # rank(A) - rank(A_F)
    nonestimable_dimension: int  # rank(A) - width
    recession_direction: tuple = ()

    @property
    def width(self) -> int:
        return self.basis.shape[1]


@dataclass
class GofReport:
    G2: float
    X2: float
    df: int
    p_G2: float | None
    p_X2: float | None
    warnings: list[str] = field(default_factory=list)


def adjusted_df(F: FacialSet, design: DesignMatrix, V: SamplingMatrix | None = None) -> int:
    """Cells of F that are free to vary minus the parameters estimable on F.

    Under a scheme with m block constraints both counts drop by m, so the
    result is |F| - rank(A_F) for every scheme (for F = all cells this is
    the classical I - rank(A), e.g. (r-1)(c-1) for independence).
    """
    m = 0 if V is None else V.m
    free_cells = len(F.cells) - m
    estimable = design.rank_of(F.cells) - m
    return free_cells - estimable


def estimable_directions(design: DesignMatrix, V: SamplingMatrix | None, F: FacialSet) -> EstimabilityReport:
    m = 0 if V is None else V.m
    rank_face = design.rank_of(F.cells)
    B_F = face_basis(design, F, V)
    basis = np.zeros((design.n_cells, B_F.shape[1]))
    basis[sorted(F.cells)] = B_F
    return EstimabilityReport(
        facial_set=F,
        rank_face=rank_face,
        m=m,
        basis=basis,
        normal_dimension=design.rank - rank_face,
        nonestimable_dimension=design.rank - basis.shape[1],
        recession_direction=F.certificate if not F.is_full else (),
    )


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution (regularized incomplete gamma)."""
    return float(gammaincc(df / 2.0, x / 2.0))


def goodness_of_fit(table: ContingencyTable, fit: ExtendedFit, df: int) -> GofReport:
    if df < 0:
        raise ValueError(f"negative degrees of freedom ({df}): inconsistent inputs")
    n = table.counts.astype(float)
    cells = np.array(sorted(fit.facial_set.cells), dtype=np.int64)
    n_F, m_F = n[cells], fit.m_hat[cells]
    pos = n_F > 0
    G2 = 2.0 * float(np.sum(n_F[pos] * np.log(n_F[pos] / m_F[pos])))
    X2 = float(np.sum((n_F - m_F) ** 2 / m_F))
    G2, X2 = max(G2, 0.0), max(X2, 0.0)
    if df == 0:
        return GofReport(G2, X2, 0, None, None, [CHI2_NOT_APPLICABLE])
    return GofReport(G2, X2, df, chi2_sf(G2, df), chi2_sf(X2, df))


# ------------------------------------------------------------------ #
# Toric residuals
# ------------------------------------------------------------------ #

_kernel_cache: "weakref.WeakKeyDictionary[DesignMatrix, list]" = weakref.WeakKeyDictionary()

EXACT_KERNEL_LIMIT = 100


def kernel_basis(design: DesignMatrix, n_samples: int = 200, seed: int = 0) -> list[list[int]]:
    """Integer vectors u with A^T u = 0.

    Up to ``EXACT_KERNEL_LIMIT`` cells this is a lattice basis of the
    integer kernel; for larger tables, random integer combinations of a
    rational kernel basis are returned instead.
    """
    if design in _kernel_cache:
        return _kernel_cache[design]
    if design.n_cells <= EXACT_KERNEL_LIMIT:
        basis = exact.integer_kernel_basis(design.A.T)
    else:
        Q_basis = np.array(exact.nullspace(design.A.T, ncols=design.n_cells), dtype=object)
        rng = np.random.default_rng(seed)
        basis = []
        for _ in range(n_samples if len(Q_basis) else 0):
            w = rng.integers(-2, 3, size=len(Q_basis)).astype(object)
            u = exact.primitive(list(w @ Q_basis))
            if any(u):
                basis.append(u)
    _kernel_cache[design] = basis
    return basis


def binomial_residual(m, u) -> float:
    """|m^{u+} - m^{u-}| / max(m^{u+}, m^{u-}), with 0^0 = 1."""
    m = np.asarray(m, dtype=float)
    u = np.asarray(u, dtype=float)
    sides = []
    for sel in (u > 0, u < 0):
        x, e = m[sel], np.abs(u[sel])
        if np.any(x == 0):
            sides.append(None)  # monomial is zero
        else:
            sides.append(float(e @ np.log(x)))
    lp, lm = sides
    if lp is None and lm is None:
        return 0.0
    if lp is None or lm is None:
        return 1.0
    return float(-np.expm1(-abs(lp - lm)))


def toric_residuals(m_hat, design: DesignMatrix) -> float:
    if np.any(np.asarray(m_hat) < 0):
        raise ValueError("fitted means must be nonnegative")
    basis = kernel_basis(design)
    return max((binomial_residual(m_hat, u) for u in basis), default=0.0)


# ------------------------------------------------------------------ #
# Verification
# ------------------------------------------------------------------ #

@dataclass
class Verification:
    status: str
    checks: dict[str, dict]

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v["passed"]]

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED


def verify_fit(fit: ExtendedFit, design: DesignMatrix, V: SamplingMatrix | None,
               table: ContingencyTable, tol_moment: float = 1e-8, tol_toric: float = 1e-8,
               tol_methods: float = 1e-6) -> Verification:
    n = table.counts.astype(float)
    m = fit.m_hat
    checks: dict[str, dict] = {}

    scale = 1.0 + float(np.max(np.abs(design.A.T @ n)))
    res = moment_residual(design, m, n)
    checks["moment_residual"] = {"value": res, "limit": tol_moment * scale,
                                 "passed": bool(res <= tol_moment * scale)}

    F = fit.facial_set.cells
    support = frozenset(int(i) for i in np.flatnonzero(m))
    exact_zeros = all(m[i] == 0.0 for i in fit.facial_set.complement)
    checks["support"] = {"value": len(support), "limit": len(F),
                         "passed": bool(support == F and exact_zeros and np.all(m >= 0))}

    tor = toric_residuals(np.maximum(m, 0.0), design)
    checks["toric_residual"] = {"value": tor, "limit": tol_toric, "passed": bool(tor <= tol_toric)}

    if V is not None and V.m:
        gaps = [abs(float(m[sorted(b)].sum()) - N) / (1.0 + N) for b, N in zip(V.blocks, V.totals)]
        worst = max(gaps)
        checks["block_totals"] = {"value": worst, "limit": tol_moment,
                                  "passed": bool(worst <= tol_moment)}

    if "method_gap" in fit.diagnostics:
        gap = fit.diagnostics["method_gap"]
        checks["method_agreement"] = {"value": gap, "limit": tol_methods,
                                      "passed": bool(gap <= tol_methods)}

    status = VERIFIED if all(c["passed"] for c in checks.values()) else FAILED
    return Verification(status, checks)
