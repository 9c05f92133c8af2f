import math

import numpy as np
import pytest

from freeplate import Ball, PlateParams, Rectangle, assemble, build_basis, eval_derivatives, stiffness
from freeplate.assembly import quadrature_degree
from freeplate.errors import AssemblyError
from freeplate.geometry import interior_quadrature


def coeffs_of(basis, f, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = basis.center - basis.half_width, basis.center + basis.half_width
    pts = rng.uniform(lo, hi, size=(4 * basis.size, basis.n))
    V = eval_derivatives(basis, pts, 0).values
    c, *_ = np.linalg.lstsq(V, f(pts), rcond=None)
    return c


@pytest.fixture(scope="module")
def disk():
    dom = Ball(1.4)
    basis = build_basis(dom, 6)
    return dom, basis, assemble(dom, basis)


def test_exact_forms_on_disk(disk):
    dom, basis, fm = disk
    R = dom.radius
    c = coeffs_of(basis, lambda p: p[:, 0] ** 2)  # u = x^2
    assert c @ fm.H @ c == pytest.approx(4 * dom.volume, rel=1e-11)
    assert c @ fm.L @ c == pytest.approx(4 * dom.volume, rel=1e-11)
    assert c @ fm.G @ c == pytest.approx(4 * math.pi * R**4 / 4, rel=1e-11)
    assert c @ fm.M @ c == pytest.approx(math.pi * R**6 / 8, rel=1e-11)
    c = coeffs_of(basis, lambda p: p[:, 0] * p[:, 1])  # u = xy: |D^2u|^2 = 2, lap u = 0
    assert c @ fm.H @ c == pytest.approx(2 * dom.volume, rel=1e-11)
    assert abs(c @ fm.L @ c) < 1e-10


def test_exact_forms_on_box():
    dom = Rectangle((2.0, 1.0, 0.5))
    basis = build_basis(dom, 4)
    fm = assemble(dom, basis)
    c = coeffs_of(basis, lambda p: p[:, 0] * p[:, 2] + p[:, 1] ** 2)
    # D^2u has entries u_xz = 1 (twice) and u_yy = 2, so |D^2u|^2 = 6 and lap u = 2
    assert c @ fm.H @ c == pytest.approx(6 * dom.volume, rel=1e-11)
    assert c @ fm.L @ c == pytest.approx(4 * dom.volume, rel=1e-11)


def test_kernels(disk):
    _, basis, fm = disk
    one = coeffs_of(basis, lambda p: np.ones(len(p)))
    lin = coeffs_of(basis, lambda p: 2 * p[:, 0] - p[:, 1] + 0.5)
    for mat in (fm.H, fm.L, fm.G):
        assert np.abs(mat @ one).max() < 1e-10
    for mat in (fm.H, fm.L):
        assert np.abs(mat @ lin).max() < 1e-10


def test_symmetry_and_definiteness(disk):
    _, _, fm = disk
    for mat in (fm.H, fm.L, fm.G, fm.M):
        assert np.array_equal(mat, mat.T)
    assert np.linalg.eigvalsh(fm.M)[0] > 0


def test_prefix_matches_lower_degree_assembly():
    dom = Rectangle((1.0, 1.0))
    big = assemble(dom, build_basis(dom, 7))
    small_basis = build_basis(dom, 4)
    small = assemble(dom, small_basis)
    pre = big.prefix(small_basis.size)
    for a, b in zip((pre.H, pre.L, pre.G, pre.M), (small.H, small.L, small.G, small.M)):
        assert np.allclose(a, b, rtol=0, atol=1e-11 * np.abs(b).max())


def test_deterministic(disk):
    dom, basis, fm = disk
    again = assemble(dom, basis)
    assert all(np.array_equal(getattr(fm, k), getattr(again, k)) for k in "HLGM")


def test_stiffness_combination(disk):
    _, _, fm = disk
    A0 = stiffness(fm, PlateParams(2, 2.5, 0.0))
    assert np.array_equal(A0, fm.H + 2.5 * fm.G)
    A = stiffness(fm, PlateParams(2, 1.0, 0.3))
    assert np.allclose(A, 0.7 * fm.H + 0.3 * fm.L + fm.G)


def test_assembly_errors():
    dom = Ball(1.0)
    basis3 = build_basis(Rectangle((1.0, 1.0, 1.0)), 3)
    with pytest.raises(AssemblyError):
        assemble(dom, basis3)
    basis = build_basis(dom, 5)
    with pytest.raises(AssemblyError):
        assemble(dom, basis, interior_quadrature(dom, quadrature_degree(basis) - 1))


def test_constant_function_and_unit_square_quadratic():
    dom = Rectangle((1.0, 1.0))
    basis = build_basis(dom, 4)
    fm = assemble(dom, basis)
    assert fm.M[0, 0] == pytest.approx(dom.volume, rel=1e-14)
    for mat in (fm.H, fm.L, fm.G):
        assert np.abs(mat[0]).max() < 1e-12
    c = coeffs_of(basis, lambda p: p[:, 0] ** 2 + p[:, 1] ** 2)
    assert c @ fm.H @ c == pytest.approx(8.0, rel=1e-11)
    assert c @ fm.L @ c == pytest.approx(16.0, rel=1e-11)
    assert np.linalg.eigvalsh(2 * fm.H - fm.L)[0] >= -1e-10 * np.linalg.norm(fm.H, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_scale_covariance(n):
    sides = (1.0, 0.7, 1.3)[:n]
    a, b = Rectangle(sides), Rectangle(tuple(2 * s for s in sides))
    fa = assemble(a, build_basis(a, 5))
    fb = assemble(b, build_basis(b, 5))
    s = 2.0
    for name, power in (("H", n - 4), ("L", n - 4), ("G", n - 2), ("M", n)):
        A, B = getattr(fa, name), getattr(fb, name)
        assert np.allclose(B, s**power * A, rtol=1e-10, atol=1e-10 * np.abs(B).max())


def test_gram_positivity_random_vectors():
    dom = Ball(1.0)
    fm = assemble(dom, build_basis(dom, 6))
    rng = np.random.default_rng(5)
    for _ in range(20):
        c = rng.standard_normal(fm.size)
        assert c @ fm.H @ c >= 0 and c @ fm.L @ c >= 0 and c @ fm.G @ c >= 0
        assert c @ fm.M @ c > 0
