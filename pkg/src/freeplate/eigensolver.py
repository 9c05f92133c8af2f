"""Dense Rayleigh-Ritz solve of ``A c = Gamma M c`` with mass truncation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg

from .assembly import FormMatrices, stiffness
from .errors import DegenerateVector, InsufficientSubspace, InvalidArgument
from .geometry import PlateParams

DEFAULT_DROP_TOL = 1e-12
POLISH_SHIFT = 1e-4
POLISH_STEPS = 2


@dataclass(frozen=True, eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    coefficients: np.ndarray  # columns are M-orthonormal eigenvectors
    kept_dimension: int
    orthonormality_residual: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def nonnegativity_tol(self) -> float:
        return 1e-8 * max(1.0, float(self.eigenvalues[-1]))


def _check_symmetric(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgument(f"{name} must be square, got shape {a.shape}")
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    if np.abs(a - a.T).max() > 1e-12 * scale:
        raise InvalidArgument(f"{name} is not symmetric")
    return a


def solve_pencil(
    A: np.ndarray,
    M: np.ndarray,
    k: int,
    drop_tol: float = DEFAULT_DROP_TOL,
    provenance: Optional[Dict[str, Any]] = None,
    polish_steps: int = POLISH_STEPS,
) -> SpectralResult:
    """Lowest ``k`` eigenpairs of the pencil ``(A, M)``.

    ``M`` is first Jacobi-scaled to unit diagonal and diagonalised; modes
    whose mass eigenvalue is below ``drop_tol`` times the largest one are
    discarded and the reduced standard problem is solved densely.

    The reduced solve carries absolute errors of order ``eps * Gamma_max``
    into the eigenvectors. ``polish_steps`` rounds of shifted block inverse
    iteration in the original coordinates, each followed by Rayleigh-Ritz on
    the block, remove that contamination; the constant mode (an exact null
    vector of ``A``) comes out exact to roundoff.
    """
    A = _check_symmetric(A, "A")
    M = _check_symmetric(M, "M")
    if A.shape != M.shape:
        raise InvalidArgument(f"A and M differ in shape: {A.shape} vs {M.shape}")
    d = np.diag(M)
    if np.any(d <= 0):
        raise InvalidArgument("M must have a positive diagonal")
    s = 1.0 / np.sqrt(d)
    Ms = s[:, None] * M * s[None, :]
    lam, V = linalg.eigh(Ms)
    keep = lam >= drop_tol * lam[-1]
    kept = int(keep.sum())
    if not 1 <= k <= kept:
        raise InsufficientSubspace(f"requested k={k} eigenpairs but only {kept} modes survive truncation")
    T = s[:, None] * (V[:, keep] / np.sqrt(lam[keep]))
    At = T.T @ A @ T
    At = 0.5 * (At + At.T)
    gam, Y = linalg.eigh(At, subset_by_index=(0, k - 1))
    C = _m_orthonormalize(T @ Y, M)
    if polish_steps and gam[-1] > 0:
        C = _polish(A, M, C, POLISH_SHIFT * gam[-1], polish_steps)
    # Rayleigh quotients against the untransformed A. Forming At costs
    # eps * ||At|| in absolute accuracy; the quotients of the (polished)
    # vectors are accurate to second order in the eigenvector error.
    gam = np.einsum("ij,ik,kj->j", C, A, C)
    order = np.argsort(gam, kind="stable")
    gam, C = gam[order], C[:, order]
    gram = C.T @ M @ C
    resid = float(np.abs(gram - np.eye(k)).max())
    return SpectralResult(gam, C, kept, resid, dict(provenance or {}))


def _m_orthonormalize(C, M):
    S = C.T @ M @ C
    R = linalg.cholesky(0.5 * (S + S.T), lower=False)
    return linalg.solve_triangular(R, C.T, trans="T", lower=False).T


def _polish(A, M, C, shift, steps):
    K = A + shift * M
    try:
        factor = linalg.cho_factor(K)
        inv = lambda B: linalg.cho_solve(factor, B)  # noqa: E731
    except linalg.LinAlgError:
        inv = lambda B: linalg.solve(K, B, assume_a="sym")  # noqa: E731
    try:
        for _ in range(steps):
            X = _m_orthonormalize(inv(M @ C), M)
            B = X.T @ A @ X
            _, Y = linalg.eigh(0.5 * (B + B.T))
            C = _m_orthonormalize(X @ Y, M)
    except linalg.LinAlgError:
        # Exactly dependent trial functions make A + shift M singular; the
        # truncated solve is then the best available answer.
        pass
    return C


def solve(fm: FormMatrices, params: PlateParams, k: int,
          drop_tol: float = DEFAULT_DROP_TOL, provenance=None) -> SpectralResult:
    return solve_pencil(stiffness(fm, params), fm.M, k, drop_tol, provenance)


def rayleigh_quotient(fm: FormMatrices, params: PlateParams, c: np.ndarray) -> float:
    c = np.asarray(c, dtype=float)
    denom = float(c @ fm.M @ c)
    if not denom > 0:
        raise DegenerateVector("coefficient vector has zero mass norm")
    return float(c @ stiffness(fm, params) @ c) / denom
