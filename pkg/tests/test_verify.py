
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PI_SQUARE, UNIT_DISK, UNIT_SQUARE, discretization, spectrum
from freeplate import (
    Ball,
    PlateParams,
    Rectangle,
    boundary_quadrature,
    build_basis,
    check_bounds,
    chasman_regime,
    coercivity_ledger,
    evaluate,
    laplacian_hessian_gap,
    residuals,
    stiffness,
    szego_weinberg_compare,
)
from freeplate.errors import InvalidArgument
from freeplate.verify import surface_divergence_of_normal_moment


def _fd_surface_divergence(basis, c, x, tangents, h=1e-5):
    """Extend V = P (D^2u nu) with nu = x/|x| and differentiate numerically."""

    def V(y):
        nu = y / np.linalg.norm(y)
        hess = evaluate(basis, c, y[None, :], 2).hess[0]
        v = hess @ nu
        return v - (v @ nu) * nu

    total = 0.0
    for t in tangents:
        total += t @ (V(x + h * t) - V(x - h * t)) / (2 * h)
    return total


@pytest.mark.parametrize("domain", [Ball(1.3), Ball(0.9, 3)])
def test_surface_divergence_against_finite_differences(domain):
    basis = build_basis(domain, 5)
    c = np.random.default_rng(1).standard_normal(basis.size)
    rule = boundary_quadrature(domain, 3)
    tab = evaluate(basis, c, rule.nodes, 3)
    div = surface_divergence_of_normal_moment(tab, rule.normals, rule.tangents, rule.curvature)
    for i in range(0, len(rule.weights), max(1, len(rule.weights) // 7)):
        ref = _fd_surface_divergence(basis, c, rule.nodes[i], rule.tangents[i])
        assert div[i] == pytest.approx(ref, rel=1e-5, abs=1e-6 * (1 + abs(ref)))


def test_surface_divergence_on_flat_facet():
    dom = Rectangle((1.0, 2.0))
    basis = build_basis(dom, 4)
    c = np.random.default_rng(2).standard_normal(basis.size)
    rule = boundary_quadrature(dom, 3)
    tab = evaluate(basis, c, rule.nodes, 3)
    div = surface_divergence_of_normal_moment(tab, rule.normals, rule.tangents, rule.curvature)
    expected = np.einsum("pijk,paj,pak,pi->p", tab.third, rule.tangents, rule.tangents, rule.normals)
    assert np.allclose(div, expected)


@pytest.mark.parametrize("n,sigma", [(2, -0.9), (2, -0.4), (2, 0.3), (3, -0.45)])
def test_coercivity_identity(n, sigma):
    dom = Ball(1.0, n) if n == 3 else UNIT_SQUARE
    _, fm = discretization(dom, 6)
    pp = PlateParams(n, 2.0, sigma)
    A = stiffness(fm, pp)
    lhs = A - (1 + (n - 1) * sigma) * fm.H - pp.tau * fm.G
    assert np.allclose(lhs, -sigma * (n * fm.H - fm.L), atol=1e-11 * np.abs(A).max())
    ledger = coercivity_ledger(fm, pp)
    assert ledger >= -1e-10 * np.linalg.norm(A, 2)
    assert laplacian_hessian_gap(fm) >= -1e-10 * np.linalg.norm(fm.H, 2)


def test_check_bounds_rows():
    res = spectrum(UNIT_DISK, 12, 1.0, 0.3)
    rep = check_bounds(res, UNIT_DISK, PlateParams(2, 1.0, 0.3), 8)
    assert [r.m for r in rep.rows] == list(range(9))
    assert rep.passed and not rep.failing_rows()
    assert rep.rows[0].partial_sum == 0.0 and rep.rows[0].r_star is None
    for r in rep.rows[1:]:
        assert r.sum_margin == pytest.approx(r.sum_bound - r.partial_sum)
        assert r.r_star is not None and r.branch == "tau_positive"
    assert rep.provenance["smooth_domain"] is True
    with pytest.raises(InvalidArgument):
        check_bounds(res, UNIT_DISK, PlateParams(2, 1.0, 0.3), len(res))
    with pytest.raises(InvalidArgument):
        check_bounds(res, UNIT_DISK, PlateParams(2, 1.0, 0.3), 0)


def test_check_bounds_detects_violation():
    from dataclasses import replace

    res = spectrum(UNIT_SQUARE, 10, 1.0, 0.3)
    fake = replace(res, eigenvalues=res.eigenvalues * 100)
    rep = check_bounds(fake, UNIT_SQUARE, PlateParams(2, 1.0, 0.3), 4)
    assert not rep.passed
    assert rep.provenance["smooth_domain"] is False
    assert all(r.next_margin < 0 or r.sum_margin < 0 for r in rep.failing_rows())
    assert rep.rows[0].passed


def test_zero_mode_residuals_are_roundoff():
    for dom in (UNIT_SQUARE, UNIT_DISK):
        basis, _ = discretization(dom, 12)
        res = spectrum(dom, 12, 1.0, 0.3)
        rr = residuals(dom, basis, (res.eigenvalues[0], res.coefficients[:, 0]), PlateParams(2, 1.0, 0.3))
        assert max(rr.interior, rr.bc1, rr.bc2) <= 1e-10


def test_residuals_flag_non_eigenfunctions():
    basis, _ = discretization(UNIT_DISK, 8)
    c = np.zeros(basis.size)
    c[3] = 1.0  # a quadratic: not an eigenfunction for tau > 0
    rr = residuals(UNIT_DISK, basis, (5.0, c), PlateParams(2, 1.0, 0.3))
    assert rr.interior > 1e-2 or rr.bc1 > 1e-2 or rr.bc2 > 1e-2


def test_residuals_need_degree_four():
    dom = UNIT_DISK
    basis = build_basis(dom, 3)
    with pytest.raises(InvalidArgument):
        residuals(dom, basis, (0.0, np.ones(basis.size)), PlateParams(2, 1.0, 0.3))


def test_chasman_regimes():
    assert chasman_regime(2, 0.3, 1.0) == "theorem-covered"
    assert chasman_regime(2, 0.3, 0.0) == "conjecture-regime"
    assert chasman_regime(3, 0.4, 2.0) == "theorem-covered"
    assert chasman_regime(4, -0.1, 1.0) == "theorem-covered"
    assert chasman_regime(4, 0.2, 2.9) == "conjecture-regime"
    assert chasman_regime(4, 0.2, 3.0) == "theorem-covered"


def test_szego_weinberg_table():
    table = szego_weinberg_compare([PI_SQUARE, UNIT_DISK], PlateParams(2, 1.0, 0.3), 10)
    assert table.rows[0].is_ball and table.ball_is_maximizer
    assert table.margin > 0 and table.regime == "theorem-covered"
    assert table.rows[0].gamma2 >= table.rows[1].gamma2


def test_szego_weinberg_validation():
    pp = PlateParams(2, 1.0, 0.3)
    with pytest.raises(InvalidArgument):
        szego_weinberg_compare([UNIT_SQUARE, UNIT_DISK], pp, 8)  # areas differ
    with pytest.raises(InvalidArgument):
        szego_weinberg_compare([UNIT_DISK], PlateParams(2, 0.0, 0.3), 8)
    with pytest.raises(InvalidArgument):
        szego_weinberg_compare([], pp, 8)


@settings(max_examples=10, deadline=None)
@given(tau=st.floats(0.0, 10.0), sigma=st.floats(-0.9, 0.9))
def test_bounds_hold_on_disk_property(tau, sigma):
    _, fm = discretization(UNIT_DISK, 10)
    from freeplate import solve

    res = solve(fm, PlateParams(2, tau, sigma), 9)
    assert check_bounds(res, UNIT_DISK, PlateParams(2, tau, sigma), 8).passed


def test_interior_residual_decreases_with_degree():
    pp = PlateParams(2, 1.0, 0.3)
    seq = []
    for p in (8, 12, 16):
        basis, _ = discretization(UNIT_DISK, p)
        res = spectrum(UNIT_DISK, p, 1.0, 0.3)
        seq.append(residuals(UNIT_DISK, basis, (res.eigenvalues[1], res.coefficients[:, 1]), pp))
    assert seq[0].interior > seq[1].interior > seq[2].interior
    for rr in seq:
        assert all(x > 0 for x in rr.normalizations)


@pytest.mark.parametrize("sigma", [-0.9, -0.4, 0.0, 0.3, 0.49])
@pytest.mark.parametrize("n", [2, 3])
def test_coercivity_grid(n, sigma):
    if not -1 / (n - 1) < sigma < 1:
        pytest.skip("outside the admissible interval")
    dom = UNIT_SQUARE if n == 2 else Rectangle((1.0, 1.0, 1.0))
    _, fm = discretization(dom, 6)
    for tau in (0.0, 1.0):
        pp = PlateParams(n, tau, sigma)
        assert coercivity_ledger(fm, pp) >= -1e-10 * np.linalg.norm(stiffness(fm, pp), 2)


def test_partial_sums_nondecreasing():
    res = spectrum(UNIT_SQUARE, 12, 1.0, 0.3)
    rep = check_bounds(res, UNIT_SQUARE, PlateParams(2, 1.0, 0.3), 8)
    sums = [r.partial_sum for r in rep.rows]
    assert sums == sorted(sums)


def test_szego_weinberg_permutation_and_duplicates():
    pp = PlateParams(2, 1.0, 0.0)
    a = szego_weinberg_compare([UNIT_DISK, PI_SQUARE], pp, 10)
    b = szego_weinberg_compare([PI_SQUARE, UNIT_DISK], pp, 10)
    assert a == b
    dup = szego_weinberg_compare([PI_SQUARE, PI_SQUARE], pp, 10)
    assert dup.rows[0].gamma2 == pytest.approx(dup.rows[1].gamma2, rel=1e-10)
    assert dup.ball_is_maximizer is None
