import dataclasses

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2
from sympy.matrices.normalforms import smith_normal_form

from extmle import exact
from extmle.design import SamplingScheme, build_design_matrix, build_sampling_matrix
from extmle.fitting import fit_extended_mle
from extmle.inference import (CHI2_NOT_APPLICABLE, FAILED, VERIFIED, adjusted_df, binomial_residual,
                              chi2_sf, estimable_directions, goodness_of_fit, kernel_basis,
                              toric_residuals, verify_fit)
from extmle.polyhedra import facial_set
from extmle.tables import ContingencyTable, FactorGrid, parse_model

from oracles import g2_direct, random_case, x2_direct

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("name, df", [
    ("corner_zeros_2x2x2", 0), ("nine_zeros_3x3x3", 0), ("eight_zeros_3x3x3", 3),
    ("sparse_exists_3x3x3", 8), ("facet_4x4x4", 4), ("four_cycle_3x3x3x3", 6), ("independence_2x2", 1),
])
def test_adjusted_df(load_example, name, df):
    table, d = load_example(name)
    F = facial_set(d, table.support())
    assert adjusted_df(F, d) == df
    multi = build_sampling_matrix(SamplingScheme.multinomial(table.total), table.grid, table, d)
    assert adjusted_df(F, d, multi) == df


def test_saturated_face_warning(load_example):
    table, d = load_example("corner_zeros_2x2x2")
    fit = fit_extended_mle(d, table)
    gof = goodness_of_fit(table, fit, adjusted_df(fit.facial_set, d))
    assert gof.df == 0 and gof.p_G2 is None and gof.p_X2 is None
    assert gof.warnings == [CHI2_NOT_APPLICABLE]
    assert gof.G2 == 0.0 and gof.X2 == 0.0


def test_negative_df_rejected(load_example):
    table, d = load_example("independence_2x2")
    with pytest.raises(ValueError, match="negative"):
        goodness_of_fit(table, fit_extended_mle(d, table), -1)


@settings(max_examples=30)
@given(seeds)
def test_gof_direct_summation(seed):
    table, d = random_case(np.random.default_rng(seed))
    fit = fit_extended_mle(d, table)
    df = adjusted_df(fit.facial_set, d)
    gof = goodness_of_fit(table, fit, df)
    cells = sorted(fit.facial_set.cells)
    n, m = table.counts[cells], fit.m_hat[cells]
    assert gof.G2 == pytest.approx(max(g2_direct(n, m), 0.0), rel=1e-10, abs=1e-10)
    assert gof.X2 == pytest.approx(x2_direct(n, m), rel=1e-10, abs=1e-10)
    if df > 0:
        assert gof.p_G2 == pytest.approx(chi2.sf(gof.G2, df), rel=1e-10, abs=1e-300)


def test_chi2_sf():
    for df in (1, 3, 8):
        for x in (0.1, 2.0, 15.0):
            assert chi2_sf(x, df) == pytest.approx(chi2.sf(x, df), rel=1e-12)


def _saturated(basis) -> bool:
    M = sympy.Matrix(basis)
    snf = smith_normal_form(M, domain=sympy.ZZ)
    diag = [abs(snf[i, i]) for i in range(min(snf.shape))]
    return all(x == 1 for x in diag if x != 0)


@pytest.mark.parametrize("levels, spec", [((2, 2), "[1][2]"), ((2, 2, 2), "[12][13][23]"),
                                          ((3, 3), "[1][2]"), ((2, 3, 3), "[12][13][23]")])
def test_integer_kernel_is_lattice_basis(levels, spec):
    grid = FactorGrid.from_levels(levels)
    d = build_design_matrix(grid, parse_model(spec, grid))
    basis = exact.integer_kernel_basis(d.A.T)
    U = np.array(basis, dtype=np.int64)
    assert U.shape == (d.n_cells - d.rank, d.n_cells)
    assert not np.any(d.A.T @ U.T)
    assert _saturated(basis)


def test_binomial_residual_conventions():
    assert binomial_residual([1.0, 1.0, 2.0, 2.0], [1, -1, 1, -1]) == pytest.approx(0.0)
    assert binomial_residual([0.0, 1.0, 0.0, 1.0], [1, -1, 1, -1]) == 1.0
    assert binomial_residual([0.0, 0.0, 1.0, 1.0], [1, -1, -1, 1]) == 0.0
    # 0^0 = 1: cells with zero exponent do not matter
    assert binomial_residual([0.0, 2.0, 2.0], [0, 1, -1]) == pytest.approx(0.0)


@settings(max_examples=40)
@given(seeds)
def test_verified_fits_lie_on_toric_variety(seed):
    table, d = random_case(np.random.default_rng(seed), max_cells=64)
    fit = fit_extended_mle(d, table)
    ver = verify_fit(fit, d, None, table)
    if ver.verified:
        assert toric_residuals(fit.m_hat, d) <= 1e-8
    assert ver.status in (VERIFIED, FAILED)


def test_toric_detects_off_model_point(load_example):
    table, d = load_example("sparse_exists_3x3x3")
    m = np.random.default_rng(0).uniform(0.5, 2.0, d.n_cells)
    assert toric_residuals(m, d) > 1e-3
    assert kernel_basis(d) is kernel_basis(d)


def test_verify_flags_corruption(load_example):
    table, d = load_example("eight_zeros_3x3x3")
    fit = fit_extended_mle(d, table)
    assert verify_fit(fit, d, None, table).verified
    bad = fit.m_hat.copy()
    bad[sorted(fit.facial_set.complement)[0]] = 1e-3
    ver = verify_fit(dataclasses.replace(fit, m_hat=bad), d, None, table)
    assert ver.status == FAILED and "support" in ver.failures


@pytest.mark.parametrize("use_scheme", [False, True])
def test_estimable_directions(load_example, use_scheme):
    table, d = load_example("eight_zeros_3x3x3")
    V = build_sampling_matrix(SamplingScheme.multinomial(table.total), table.grid, table, d) \
        if use_scheme else None
    F = facial_set(d, table.support())
    est = estimable_directions(d, V, F)
    m = 0 if V is None else 1
    assert est.rank_face == 18 and est.width == 18 - m
    assert est.normal_dimension == d.rank - 18 == 1
    assert np.allclose(est.basis[sorted(F.complement)], 0.0)
    assert np.allclose(est.basis.T @ est.basis, np.eye(est.width))
    cells = sorted(F.cells)
    assert np.linalg.matrix_rank(np.hstack([d.A[cells], est.basis[cells]])) == 18
    if V is not None:
        assert np.allclose(est.basis.T @ V.indicators, 0.0)


def test_estimability_full_face(load_example):
    table, d = load_example("independence_2x2")
    est = estimable_directions(d, None, facial_set(d, table.support()))
    assert est.width == 3 and est.nonestimable_dimension == 0 and est.recession_direction == ()


def test_scheme_invariant_gof():
    grid = FactorGrid.from_levels([2, 3])
    table = ContingencyTable(grid, np.array([3, 1, 4, 1, 5, 9]))
    d = build_design_matrix(grid, parse_model("[1][2]", grid))
    a = fit_extended_mle(d, table)
    b = fit_extended_mle(d, table, SamplingScheme.by_factor(table, 0))
    ga, gb = goodness_of_fit(table, a, 2), goodness_of_fit(table, b, 2)
    assert ga.G2 == pytest.approx(gb.G2, rel=1e-9)
