"""Gram matrices of the plate energy and the stiffness combination.

The four Grams are

    H_ij = int sum_kl d_kl phi_i d_kl phi_j      L_ij = int lap phi_i lap phi_j
    G_ij = int grad phi_i . grad phi_j           M_ij = int phi_i phi_j

and the real-symmetric plate form is ``(1 - sigma) H + sigma L + tau G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BasisSet, eval_derivatives
from .errors import AssemblyError
from .geometry import DomainSpec, PlateParams, QuadratureRule, interior_quadrature

# Nodes per accumulation block. Fixed so the summation order never depends on
# how work is scheduled.
BLOCK_SIZE = 512


@dataclass(frozen=True, eq=False)
class FormMatrices:
    H: np.ndarray
    L: np.ndarray
    G: np.ndarray
    M: np.ndarray
    n: int

    @property
    def size(self) -> int:
        return self.M.shape[0]

    def prefix(self, size: int) -> "FormMatrices":
        """Restriction to the first ``size`` basis functions (a nested trial space)."""
        s = slice(0, size)
        return FormMatrices(self.H[s, s], self.L[s, s], self.G[s, s], self.M[s, s], self.n)


def quadrature_degree(basis: BasisSet) -> int:
    """Exactness needed for the mass Gram; used for every term."""
    return 2 * basis.degree


def _symmetrize(a):
    return 0.5 * (a + a.T)


def assemble(
    domain: DomainSpec,
    basis: BasisSet,
    rule: Optional[QuadratureRule] = None,
) -> FormMatrices:
    if basis.n != domain.n:
        raise AssemblyError(f"basis is {basis.n}-dimensional but domain is {domain.n}-dimensional")
    if rule is None:
        rule = interior_quadrature(domain, quadrature_degree(basis))
    if rule.nodes.shape[1] != domain.n:
        raise AssemblyError("quadrature nodes do not match the domain dimension")
    if rule.degree < quadrature_degree(basis):
        raise AssemblyError(
            f"quadrature exact to degree {rule.degree}, assembly needs {quadrature_degree(basis)}"
        )
    N, n = basis.size, basis.n
    H = np.zeros((N, N))
    L = np.zeros((N, N))
    G = np.zeros((N, N))
    M = np.zeros((N, N))
    for start in range(0, len(rule.weights), BLOCK_SIZE):
        stop = start + BLOCK_SIZE
        tab = eval_derivatives(basis, rule.nodes[start:stop], max_order=2)
        sw = np.sqrt(rule.weights[start:stop])
        v = tab.values * sw[:, None]
        M += v.T @ v
        g = (tab.grad * sw[:, None, None]).transpose(1, 0, 2).reshape(N, -1)
        G += g @ g.T
        h = (tab.hess * sw[:, None, None, None]).transpose(1, 0, 2, 3).reshape(N, -1)
        H += h @ h.T
        lap = tab.laplacian * sw[:, None]
        L += lap.T @ lap
    return FormMatrices(_symmetrize(H), _symmetrize(L), _symmetrize(G), _symmetrize(M), n)


def stiffness(fm: FormMatrices, params: PlateParams) -> np.ndarray:
    """``A = (1 - sigma) H + sigma L + tau G``; exactly ``H + tau G`` when ``sigma == 0``."""
    if params.sigma == 0.0:
        return fm.H + params.tau * fm.G
    return (1.0 - params.sigma) * fm.H + params.sigma * fm.L + params.tau * fm.G
