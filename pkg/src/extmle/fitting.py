"""Extended MLE of the cell means under Poisson and product multinomial sampling.

The facial set F of the observed support is computed first and the model
is fitted on F alone, with the cells outside F held at exact zeros.  On
F the restricted model has an ordinary MLE, so both IPF and Newton's
method behave as in the textbook case.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .design import (MULTINOMIAL, PRODUCT_MULTINOMIAL, DesignMatrix,
                     SamplingMatrix, SamplingScheme, build_sampling_matrix, orthonormal_complement)
from .polyhedra import FacialSet, facial_set
from .tables import ContingencyTable

log = logging.getLogger(__name__)

METHODS = ("ipf", "newton", "both")


class NonConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3g} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class FitOptions:
    method: str = "both"
    tol_moment: float = 1e-8
    tol_gradient: float = 1e-8
    max_ipf_iter: int = 10_000
    max_newton_iter: int = 100

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


@dataclass
class ExtendedFit:
    m_hat: np.ndarray
    facial_set: FacialSet
    likelihood_zeros: frozenset[int]
    method: str
    iterations: dict[str, int]
    moment_residual: float
    loglik: float
    scheme: SamplingScheme
    diagnostics: dict = field(default_factory=dict)

    @property
    def mle_exists(self) -> bool:
        return self.facial_set.is_full


# ------------------------------------------------------------------ #
# Likelihoods
# ------------------------------------------------------------------ #

def _log_factorials(n) -> float:
    return float(gammaln(np.asarray(n, dtype=float) + 1.0).sum())


def _dot_extended(n, mu) -> float:
    # 0 * (-inf) counts as 0 for cells off the facial set
    n = np.asarray(n, dtype=float)
    mu = np.asarray(mu, dtype=float)
    mask = n != 0
    return float(n[mask] @ mu[mask])


def poisson_loglik(mu, n) -> float:
    """(n, mu) - sum(exp(mu)) - sum(log n!), with exp(-inf) = 0."""
    mu = np.asarray(mu, dtype=float)
    with np.errstate(over="ignore"):
        return _dot_extended(n, mu) - float(np.exp(mu).sum()) - _log_factorials(n)


def product_multinomial_loglik(beta, n, scheme: SamplingScheme) -> float:
    """(n, beta) - sum_j N_j log(exp(beta), chi_j) + sum_j log N_j! - sum(log n!)."""
    beta = np.asarray(beta, dtype=float)
    if scheme.kind not in (MULTINOMIAL, PRODUCT_MULTINOMIAL):
        raise ValueError("product_multinomial_loglik needs a (product) multinomial scheme")
    value = _dot_extended(n, beta) - _log_factorials(n)
    for block, N in zip(scheme.constrained_blocks(beta.shape[0]), scheme.totals):
        idx = np.array(sorted(block))
        b = beta[idx]
        top = np.max(b)
        value -= N * (top + np.log(np.exp(b - top).sum())) - float(gammaln(N + 1.0))
    return float(value)


def moment_residual(design: DesignMatrix, m_hat, n) -> float:
    return float(np.max(np.abs(design.A.T @ (np.asarray(m_hat, float) - np.asarray(n, float)))))


def _moment_scale(design: DesignMatrix, n) -> float:
    return 1.0 + float(np.max(np.abs(design.A.T @ np.asarray(n, float))))


# ------------------------------------------------------------------ #
# IPF
# ------------------------------------------------------------------ #

def _margin_indices(design: DesignMatrix) -> list[np.ndarray]:
    out, start = [], 0
    for term in design.model.terms:
        k = int(np.prod([design.grid.levels[f] for f in term]))
        out.append(np.argmax(design.A[:, start:start + k], axis=1))
        start += k
    return out


def ipf(design: DesignMatrix, n, F: FacialSet, tol: float = 1e-8,
        max_iter: int = 10_000) -> tuple[np.ndarray, int]:
    """Iterative proportional fitting restricted to the facial set.

    Starts from the uniform table on F with the observed total and cycles
    through the generating-class margins.  Returns ``(m, cycles)``.
    """
    n = np.asarray(n, dtype=float)
    I = n.shape[0]
    cells = np.array(sorted(F.cells), dtype=np.int64)
    m = np.zeros(I)
    m[cells] = n.sum() / len(cells)
    terms = _margin_indices(design)
    targets = [np.bincount(idx, weights=n, minlength=idx.max() + 1) for idx in terms]
    limit = tol * _moment_scale(design, n)
    residual = np.inf
    for cycle in range(1, max_iter + 1):
        for idx, target in zip(terms, targets):
            fitted = np.bincount(idx, weights=m, minlength=target.shape[0])
            ratio = np.divide(target, fitted, out=np.zeros_like(target), where=fitted > 0)
            m *= ratio[idx]
        residual = max(np.max(np.abs(np.bincount(idx, weights=m, minlength=t.shape[0]) - t))
                       for idx, t in zip(terms, targets))
        if residual <= limit:
            return m, cycle
    raise NonConvergenceError("IPF did not converge", float(residual), max_iter)


# ------------------------------------------------------------------ #
# Newton-Raphson on the face
# ------------------------------------------------------------------ #

def face_basis(design: DesignMatrix, F: FacialSet, sampling: SamplingMatrix | None = None) -> np.ndarray:
    """Orthonormal basis of span(A_F), minus the block indicators on F if given.

    The width is rank(A_F) - m, decided exactly.
    """
    cells = sorted(F.cells)
    A_F = design.A[cells].astype(float)
    width = design.rank_of(cells)
    if sampling is None or sampling.m == 0:
        return orthonormal_complement(A_F, np.zeros((len(cells), 0)), width)
    V_F = sampling.indicators[cells].astype(float)
    return orthonormal_complement(A_F, V_F, width - sampling.m)


def _newton(B, n_F, objective, moments, hessian, theta, tol, max_iter, label):
    scale = max(1.0, float(np.max(n_F)))
    if theta.size == 0:  # nothing free to estimate on F
        return theta, 0
    value = objective(theta)
    grad = B.T @ (n_F - moments(theta))
    for it in range(1, max_iter + 1):
        H = hessian(theta)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"{label}: singular information matrix on the facial set") from exc
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            new = objective(cand)
            if np.isfinite(new) and new >= value - 1e-12 * abs(value):
                break
            t /= 2
        else:
            raise NonConvergenceError(f"{label}: line search failed",
                                      float(np.max(np.abs(grad))), it)
        theta, value = cand, new
        grad = B.T @ (n_F - moments(theta))
        if np.max(np.abs(grad)) <= tol * scale:
            return _polish(B, n_F, moments, hessian, theta, grad), it
    raise NonConvergenceError(f"{label} did not converge", float(np.max(np.abs(grad))), max_iter)


def _polish(B, n_F, moments, hessian, theta, grad, steps=3):
    # quadratic convergence: a few full steps take the residual to rounding level
    best = float(np.max(np.abs(grad)))
    for _ in range(steps):
        try:
            cand = theta + np.linalg.solve(hessian(theta), grad)
        except np.linalg.LinAlgError:
            break
        g = B.T @ (n_F - moments(cand))
        size = float(np.max(np.abs(g)))
        if not np.isfinite(size) or size >= best:
            break
        theta, grad, best = cand, g, size
    return theta


def newton_fit(design: DesignMatrix, n, F: FacialSet, tol: float = 1e-8, max_iter: int = 100,
               theta0=None, B_F: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Poisson MLE on F by damped Newton-Raphson in an orthonormal basis of span(A_F).

    Returns ``(m, iterations)`` with exact zeros off F.
    """
    n = np.asarray(n, dtype=float)
    cells = np.array(sorted(F.cells), dtype=np.int64)
    B = face_basis(design, F) if B_F is None else B_F
    n_F = n[cells]
    if theta0 is None:
        theta0 = B.T @ np.log(n_F + 0.5)

    def mu(theta):
        return B @ theta

    def objective(theta):
        with np.errstate(over="ignore"):
            return float(n_F @ mu(theta) - np.exp(mu(theta)).sum())

    def moments(theta):
        return np.exp(mu(theta))

    def hessian(theta):
        return B.T @ (moments(theta)[:, None] * B)

    theta, it = _newton(B, n_F, objective, moments, hessian, np.asarray(theta0, float),
                        tol, max_iter, "Newton (Poisson)")
    m = np.zeros(n.shape[0])
    m[cells] = moments(theta)
    return m, it


def multinomial_newton_fit(design: DesignMatrix, n, F: FacialSet, sampling: SamplingMatrix,
                           tol: float = 1e-8, max_iter: int = 100, theta0=None) -> tuple[np.ndarray, int]:
    """Product multinomial MLE on F, maximizing the likelihood parametrized by
    the estimable directions orthogonal to the block indicators."""
    n = np.asarray(n, dtype=float)
    cells = np.array(sorted(F.cells), dtype=np.int64)
    W = face_basis(design, F, sampling)
    n_F = n[cells]
    chi = sampling.indicators[cells].astype(float)
    totals = np.array(sampling.totals, dtype=float)
    if theta0 is None:
        theta0 = W.T @ np.log(n_F + 0.5)
    block_of = np.argmax(chi, axis=1)

    def moments(theta):
        beta = W @ theta
        out = np.empty_like(beta)
        for j in range(chi.shape[1]):
            sel = block_of == j
            b = beta[sel]
            e = np.exp(b - b.max())
            out[sel] = totals[j] * e / e.sum()
        return out

    def objective(theta):
        beta = W @ theta
        value = float(n_F @ beta)
        for j in range(chi.shape[1]):
            b = beta[block_of == j]
            top = b.max()
            value -= totals[j] * (top + np.log(np.exp(b - top).sum()))
        return value

    def hessian(theta):
        m = moments(theta)
        H = W.T @ (m[:, None] * W)
        for j in range(chi.shape[1]):
            v = W.T @ (m * (block_of == j))
            H -= np.outer(v, v) / totals[j]
        return H

    theta, it = _newton(W, n_F, objective, moments, hessian, np.asarray(theta0, float),
                        tol, max_iter, "Newton (product multinomial)")
    m = np.zeros(n.shape[0])
    m[cells] = moments(theta)
    return m, it


# ------------------------------------------------------------------ #
# Driver
# ------------------------------------------------------------------ #

def fit_extended_mle(design: DesignMatrix, table: ContingencyTable,
                     scheme: SamplingScheme | None = None, options: FitOptions | None = None,
                     F: FacialSet | None = None) -> ExtendedFit:
    """Extended MLE of the cell means; the ordinary MLE when the facial set is full."""
    scheme = SamplingScheme.poisson() if scheme is None else scheme
    options = FitOptions() if options is None else options
    sampling = build_sampling_matrix(scheme, table.grid, table, design)
    if F is None:
        support = table.support()
        if not support:
            raise ValueError("the table has no positive counts")
        F = facial_set(design, support)
    n = table.counts.astype(float)
    multinomial_route = scheme.kind in (MULTINOMIAL, PRODUCT_MULTINOMIAL)

    def run_newton():
        if multinomial_route:
            return multinomial_newton_fit(design, n, F, sampling, options.tol_gradient,
                                          options.max_newton_iter)
        return newton_fit(design, n, F, options.tol_gradient, options.max_newton_iter)

    iterations: dict[str, int] = {}
    diagnostics: dict = {}
    if options.method in ("ipf", "both"):
        m_ipf, iterations["ipf"] = ipf(design, n, F, options.tol_moment, options.max_ipf_iter)
        m_hat = m_ipf
    if options.method in ("newton", "both"):
        m_newton, iterations["newton"] = run_newton()
        m_hat = m_newton
    if options.method == "both":
        diagnostics["method_gap"] = float(np.max(np.abs(m_ipf - m_newton)))
    if design.rank_of(F.cells) == len(F.cells):
        # saturated on F: the moment equations force m = n there
        diagnostics["iterative_gap"] = float(np.max(np.abs(m_hat - n)))
        m_hat = n.copy()

    off = np.array(sorted(F.complement), dtype=np.int64)
    m_hat[off] = 0.0
    with np.errstate(divide="ignore"):
        mu = np.log(m_hat)
    fit = ExtendedFit(
        m_hat=m_hat,
        facial_set=F,
        likelihood_zeros=F.complement,
        method=options.method,
        iterations=iterations,
        moment_residual=moment_residual(design, m_hat, n),
        loglik=product_multinomial_loglik(mu, n, scheme) if multinomial_route else poisson_loglik(mu, n),
        scheme=scheme,
        diagnostics=diagnostics,
    )
    log.debug("fit on |F|=%d of %d cells: %s", len(F.cells), F.n_cells, iterations)
    return fit
