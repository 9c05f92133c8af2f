"""Verification harness: bounds, natural-boundary residuals, coercivity, comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .assembly import FormMatrices, assemble, stiffness
from .basis import BasisSet, build_basis, evaluate
from .bounds import BoundInputs, next_bound, sum_bound
from .eigensolver import DEFAULT_DROP_TOL, SpectralResult, solve
from .errors import InvalidArgument
from .geometry import (
    Ball,
    DomainSpec,
    PlateParams,
    boundary_quadrature,
    interior_quadrature,
)

# Slack allowed on a margin before a row counts as failed. Rayleigh-Ritz
# values carry roundoff; the zero mode in particular sits at +-1e-20.
MARGIN_RTOL = 1e-8


@dataclass(frozen=True)
class BoundRow:
    m: int
    partial_sum: float
    sum_bound: float
    sum_margin: float
    next_eigenvalue: float
    next_bound: float
    next_margin: float
    branch: str
    r_star: Optional[float]

    @property
    def passed(self) -> bool:
        ok_next = self.next_margin >= -_slack(self.next_bound, self.next_eigenvalue)
        if self.m == 0:
            return ok_next
        return ok_next and self.sum_margin >= -_slack(self.sum_bound, self.partial_sum)


def _slack(*values):
    return MARGIN_RTOL * max(1.0, *(abs(v) for v in values))


@dataclass(frozen=True)
class BoundReport:
    rows: Tuple[BoundRow, ...]
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failing_rows(self) -> List[BoundRow]:
        return [r for r in self.rows if not r.passed]


def check_bounds(
    spectral: SpectralResult, domain: DomainSpec, params: PlateParams, m_max: int
) -> BoundReport:
    """Compare partial sums and next eigenvalues against the bounds for ``m <= m_max``.

    Row ``m = 0`` tests only ``Gamma_1`` against the next-eigenvalue bound;
    rows ``1..m_max`` test both.
    """
    if m_max < 1:
        raise InvalidArgument("m_max must be >= 1")
    if len(spectral) < m_max + 1:
        raise InvalidArgument(
            f"need {m_max + 1} eigenvalues for m_max={m_max}, have {len(spectral)}"
        )
    gam = spectral.eigenvalues
    partial = np.cumsum(gam)
    rows = []
    for m in range(m_max + 1):
        inp = BoundInputs(params.n, domain.volume, params.tau, m)
        nb, branch, trace = next_bound(inp)
        if m:
            s, sb = float(partial[m - 1]), sum_bound(inp)
        else:
            s, sb = 0.0, 0.0
        rows.append(
            BoundRow(
                m=m,
                partial_sum=s,
                sum_bound=sb,
                sum_margin=sb - s,
                next_eigenvalue=float(gam[m]),
                next_bound=nb,
                next_margin=nb - float(gam[m]),
                branch=branch,
                r_star=None if trace is None or not trace.attained else trace.r_star,
            )
        )
    prov = dict(spectral.provenance)
    prov.update(domain=domain.describe(), tau=params.tau, sigma=params.sigma, n=params.n,
                kept_dimension=spectral.kept_dimension,
                smooth_domain=domain.smooth)
    return BoundReport(tuple(rows), prov)


@dataclass(frozen=True)
class ResidualReport:
    interior: float
    bc1: float
    bc2: float
    normalizations: Tuple[float, float, float]


def _l2(weights, f):
    return math.sqrt(max(float(weights @ (f * f)), 0.0))


def surface_divergence_of_normal_moment(tab, normals, tangents, curvature):
    """``div_S(Proj_S[(D^2 u) nu])`` at boundary nodes of an umbilic boundary.

    With the normal extended so that ``d nu / dt = kappa t`` along tangents,

        div_S = sum_a D^3u(t_a, t_a, nu) + kappa (sum_a u_{t_a t_a} - (n-1) u_{nu nu}).

    ``kappa`` is 0 on flat facets and ``1/R`` on a sphere of radius ``R``.
    """
    n = normals.shape[1]
    third = np.einsum("pijk,paj,pak,pi->p", tab.third, tangents, tangents, normals)
    tt = np.einsum("pjk,paj,pak->p", tab.hess, tangents, tangents)
    nn = np.einsum("pjk,pj,pk->p", tab.hess, normals, normals)
    return third + curvature * (tt - (n - 1) * nn)


def residuals(
    domain: DomainSpec,
    basis: BasisSet,
    eigenpair: Tuple[float, np.ndarray],
    params: PlateParams,
    degree: Optional[int] = None,
) -> ResidualReport:
    """Relative residuals of the PDE and both natural boundary conditions.

    Each residual is divided by the sum of the L2 norms of its terms plus a
    floor ``||u|| / ell**k`` (``ell = |Omega|**(1/n)``, ``k`` the derivative
    order of the condition), so that an eigenfunction whose terms all vanish,
    like the constant, reports roundoff rather than 0/0.
    """
    gamma, c = eigenpair
    c = np.asarray(c, dtype=float)
    if basis.degree < 4:
        raise InvalidArgument("residuals need a basis of degree >= 4")
    q = degree if degree is not None else 2 * basis.degree
    ell = domain.volume ** (1.0 / domain.n)
    tau, sigma = params.tau, params.sigma

    rule = interior_quadrature(domain, q)
    tab = evaluate(basis, c, rule.nodes, max_order=4)
    w = rule.weights
    bil, lap, val = tab.bilaplacian, tab.laplacian, tab.values
    pde = bil - tau * lap - gamma * val
    norm_pde = _l2(w, bil) + _l2(w, tau * lap) + _l2(w, gamma * val) + _l2(w, val) / ell**4

    brule = boundary_quadrature(domain, q)
    btab = evaluate(basis, c, brule.nodes, max_order=3)
    wb, nu = brule.weights, brule.normals
    u_nn = np.einsum("pjk,pj,pk->p", btab.hess, nu, nu)
    blap = btab.laplacian
    u_n = np.einsum("pj,pj->p", btab.grad, nu)
    dlap_n = np.einsum("piij,pj->p", btab.third, nu)
    div = surface_divergence_of_normal_moment(btab, nu, brule.tangents, brule.curvature)
    floor_b = _l2(wb, btab.values)

    t1a, t1b = (1 - sigma) * u_nn, sigma * blap
    bc1 = t1a + t1b
    norm1 = _l2(wb, t1a) + _l2(wb, t1b) + floor_b / ell**2

    t2a, t2b, t2c = tau * u_n, (1 - sigma) * div, dlap_n
    bc2 = t2a - t2b - t2c
    norm2 = _l2(wb, t2a) + _l2(wb, t2b) + _l2(wb, t2c) + floor_b / ell**3

    return ResidualReport(
        interior=_l2(w, pde) / norm_pde,
        bc1=_l2(wb, bc1) / norm1,
        bc2=_l2(wb, bc2) / norm2,
        normalizations=(norm_pde, norm1, norm2),
    )


def _min_eig(a):
    return float(linalg.eigvalsh(0.5 * (a + a.T))[0])


def coercivity_ledger(fm: FormMatrices, params: PlateParams) -> float:
    """Smallest eigenvalue of ``A - (1 + (n-1) sigma) H - tau G`` (sigma < 0) or of ``A``.

    For ``sigma < 0`` the matrix equals ``-sigma (n H - L)``, which is PSD
    because ``(lap u)^2 <= n |D^2 u|^2`` pointwise.
    """
    A = stiffness(fm, params)
    if params.sigma < 0:
        return _min_eig(A - (1 + (params.n - 1) * params.sigma) * fm.H - params.tau * fm.G)
    return _min_eig(A)


def laplacian_hessian_gap(fm: FormMatrices) -> float:
    """Smallest eigenvalue of ``n H - L``."""
    return _min_eig(fm.n * fm.H - fm.L)


def chasman_regime(n: int, sigma: float, tau: float) -> str:
    """``"theorem-covered"`` where the ball is known to maximise Gamma_2, else ``"conjecture-regime"``."""
    if n == 2:
        covered = sigma > -51.0 / 97.0 or tau >= 3.0 * (sigma - 1.0) / (sigma + 1.0)
    elif n == 3:
        covered = True
    else:
        covered = sigma <= 0 or tau >= (n + 2) / 2.0
    return "theorem-covered" if covered and tau > 0 else "conjecture-regime"


@dataclass(frozen=True)
class ComparisonRow:
    domain: str
    is_ball: bool
    gamma2: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: Tuple[ComparisonRow, ...]
    ball_is_maximizer: Optional[bool]
    regime: str
    margin: Optional[float]  # Gamma_2(best ball) - Gamma_2(best non-ball)


def lowest_nonzero(domain: DomainSpec, params: PlateParams, p: int,
                   drop_tol: float = DEFAULT_DROP_TOL) -> float:
    basis = build_basis(domain, p)
    res = solve(assemble(domain, basis), params, 2, drop_tol)
    return float(res.eigenvalues[1])


def szego_weinberg_compare(
    domains: Sequence[DomainSpec], params: PlateParams, p: int, rtol: float = 1e-10
) -> ComparisonTable:
    """Gamma_2 for each of several equal-volume domains, largest first."""
    if not domains:
        raise InvalidArgument("no domains to compare")
    if not params.tau > 0:
        raise InvalidArgument("the comparison is stated for tau > 0")
    v0 = domains[0].volume
    for d in domains:
        if d.n != params.n:
            raise InvalidArgument(f"{d.describe()} is not {params.n}-dimensional")
        if abs(d.volume - v0) > rtol * v0:
            raise InvalidArgument(
                f"volume mismatch: {d.describe()} has {d.volume!r}, expected {v0!r}"
            )
    rows = [ComparisonRow(d.describe(), isinstance(d, Ball), lowest_nonzero(d, params, p))
            for d in domains]
    rows.sort(key=lambda r: (-r.gamma2, r.domain))
    balls = [r.gamma2 for r in rows if r.is_ball]
    others = [r.gamma2 for r in rows if not r.is_ball]
    if balls and others:
        margin = max(balls) - max(others)
        ball_max = margin >= 0
    else:
        margin, ball_max = None, (rows[0].is_ball if balls else None)
    return ComparisonTable(tuple(rows), ball_max, chasman_regime(params.n, params.sigma, params.tau),
                           margin)
