"""Global polynomial trial space of tensor Legendre products.

Each basis function is ``prod_i P_{alpha_i}(xi_i)`` where ``xi`` maps the
domain's bounding box affinely onto ``[-1, 1]^n`` and ``|alpha| <= p``.
Functions are ordered by total degree first, so the basis of degree ``p``
is a prefix of the basis of any higher degree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgument
from .geometry import DomainSpec


@dataclass(frozen=True, eq=False)
class BasisSet:
    degree: int
    center: np.ndarray
    half_width: np.ndarray
    multi_indices: np.ndarray  # (N, n) ints

    @property
    def n(self) -> int:
        return self.multi_indices.shape[1]

    @property
    def size(self) -> int:
        return self.multi_indices.shape[0]

    def to_reference(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.center) / self.half_width


def multi_indices(n: int, p: int) -> np.ndarray:
    """All ``alpha`` in N^n with ``|alpha| <= p``, by total degree then lexicographically."""
    out = []
    for total in range(p + 1):
        level = [a for a in itertools.product(range(total + 1), repeat=n) if sum(a) == total]
        out.extend(sorted(level, reverse=True))
    return np.array(out, dtype=int)


def build_basis(domain: DomainSpec, p: int) -> BasisSet:
    if int(p) != p or p < 2:
        raise InvalidArgument(f"basis degree must be an integer >= 2, got {p!r}")
    lo, hi = domain.bounding_box
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    idx = multi_indices(domain.n, int(p))
    assert len(idx) == math.comb(int(p) + domain.n, domain.n)
    return BasisSet(int(p), (lo + hi) / 2, (hi - lo) / 2, idx)


def legendre_table(x: np.ndarray, p: int, max_order: int) -> np.ndarray:
    """Derivatives of Legendre polynomials.

    Returns ``T`` with ``T[d, k, :] = P_k^{(d)}(x)`` for ``d <= max_order`` and
    ``k <= p``, from the differentiated three-term recurrence

        (k+1) P_{k+1}^{(d)} = (2k+1) (x P_k^{(d)} + d P_k^{(d-1)}) - k P_{k-1}^{(d)}.
    """
    x = np.asarray(x, dtype=float)
    T = np.zeros((max_order + 1, p + 1) + x.shape)
    T[0, 0] = 1.0
    if p >= 1:
        T[0, 1] = x
        if max_order >= 1:
            T[1, 1] = 1.0
    for k in range(1, p):
        for d in range(max_order + 1):
            acc = (2 * k + 1) * x * T[d, k]
            if d:
                acc = acc + (2 * k + 1) * d * T[d - 1, k]
            T[d, k + 1] = (acc - k * T[d, k - 1]) / (k + 1)
    return T


class _Evaluator:
    """Caches the 1D tables for a batch of points."""

    def __init__(self, basis: BasisSet, points: np.ndarray, max_order: int):
        xi = basis.to_reference(np.atleast_2d(points))
        self.basis = basis
        self.tables = [legendre_table(xi[:, i], basis.degree, max_order) for i in range(basis.n)]
        self.max_order = max_order
        self._cache: Dict[Tuple[int, ...], np.ndarray] = {}

    def __call__(self, beta: Sequence[int]) -> np.ndarray:
        """``D^beta phi_j`` at every point, shape ``(npts, N)``."""
        beta = tuple(int(b) for b in beta)
        if sum(beta) > self.max_order:
            raise InvalidArgument(f"derivative {beta} exceeds max_order={self.max_order}")
        hit = self._cache.get(beta)
        if hit is not None:
            return hit
        alpha = self.basis.multi_indices
        scale = np.prod(self.basis.half_width ** -np.asarray(beta, float))
        out = scale * self.tables[0][beta[0]][alpha[:, 0]].T
        for i in range(1, self.basis.n):
            out = out * self.tables[i][beta[i]][alpha[:, i]].T
        self._cache[beta] = out
        return out


def _unit(n, *axes):
    b = [0] * n
    for a in axes:
        b[a] += 1
    return tuple(b)


@dataclass(frozen=True, eq=False)
class DerivativeTables:
    """Basis values and Cartesian derivative tensors at a batch of points.

    Shapes: ``values (P, N)``, ``grad (P, N, n)``, ``hess (P, N, n, n)``,
    ``third (P, N, n, n, n)``; ``bilaplacian (P, N)`` is filled when
    ``max_order == 4``.
    """

    values: np.ndarray
    grad: Optional[np.ndarray] = None
    hess: Optional[np.ndarray] = None
    third: Optional[np.ndarray] = None
    bilaplacian: Optional[np.ndarray] = None

    @property
    def laplacian(self) -> np.ndarray:
        return np.trace(self.hess, axis1=-2, axis2=-1)


def eval_derivatives(basis: BasisSet, points: np.ndarray, max_order: int = 2) -> DerivativeTables:
    """Exact derivatives of every basis function at ``points``.

    Mixed partials are computed once per multi-index and copied into each
    symmetric slot, so the Hessian and third-derivative tensors are exactly
    symmetric.
    """
    if max_order not in (0, 1, 2, 3, 4):
        raise InvalidArgument(f"max_order must be in 0..4, got {max_order!r}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(points)):
        raise InvalidArgument("points must be finite")
    ev = _Evaluator(basis, points, max_order)
    n = basis.n
    out = {"values": ev((0,) * n)}
    for order, key in ((1, "grad"), (2, "hess"), (3, "third")):
        if max_order < order:
            break
        shape = points.shape[:1] + (basis.size,) + (n,) * order
        arr = np.empty(shape)
        for axes in itertools.product(range(n), repeat=order):
            arr[(Ellipsis,) + axes] = ev(_unit(n, *axes))
        out[key] = arr
    if max_order >= 4:
        out["bilaplacian"] = sum(
            ev(_unit(n, i, i, j, j)) for i in range(n) for j in range(n)
        )
    return DerivativeTables(**out)


def evaluate(basis: BasisSet, coeffs: np.ndarray, points: np.ndarray, max_order: int = 2):
    """Tables for the function ``sum_j c_j phi_j`` (basis axis contracted)."""
    tables = eval_derivatives(basis, points, max_order)
    c = np.asarray(coeffs, dtype=float)
    return DerivativeTables(
        **{
            name: (None if arr is None else np.tensordot(arr, c, axes=([1], [0])))
            for name, arr in tables.__dict__.items()
        }
    )
