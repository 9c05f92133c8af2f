"""Domains, plate parameters and quadrature rules.

Two domain shapes are supported: axis-aligned boxes centred at the origin
(any dimension ``n >= 2``) and balls centred at the origin (``n`` in {2, 3}).
Interior rules are tensor Gauss-Legendre rules in Cartesian or polar /
spherical coordinates; boundary rules carry outward normals, orthonormal
tangent frames and the (umbilic) curvature of the boundary at each node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from .errors import InvalidArgument, UnsupportedDomain


@dataclass(frozen=True)
class PlateParams:
    """Dimension ``n``, tension ``tau`` and Poisson's ratio ``sigma``.

    ``sigma`` must lie in the open interval ``(-1/(n-1), 1)`` where the
    plate energy is coercive.
    """

    n: int
    tau: float
    sigma: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArgument(f"n must be an integer >= 2, got {self.n!r}")
        if not math.isfinite(self.tau) or self.tau < 0:
            raise InvalidArgument(f"tau must be finite and >= 0, got {self.tau!r}")
        lo = -1.0 / (self.n - 1)
        if not (lo < self.sigma < 1.0):
            raise InvalidArgument(
                f"sigma must lie in ({lo:.6g}, 1) for n={self.n}, got {self.sigma!r}"
            )
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "sigma", float(self.sigma))


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n, ``pi**(n/2) / Gamma(n/2 + 1)``."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class Rectangle:
    """Box ``prod_i [-a_i/2, a_i/2]``."""

    sides: Tuple[float, ...]

    def __post_init__(self):
        sides = tuple(float(a) for a in self.sides)
        if len(sides) < 2:
            raise InvalidArgument("a rectangle needs at least two side lengths")
        if not all(math.isfinite(a) and a > 0 for a in sides):
            raise InvalidArgument(f"side lengths must be positive, got {sides}")
        object.__setattr__(self, "sides", sides)

    @property
    def n(self) -> int:
        return len(self.sides)

    @property
    def volume(self) -> float:
        return math.prod(self.sides)

    @property
    def surface_measure(self) -> float:
        v = self.volume
        return sum(2.0 * v / a for a in self.sides)

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        half = np.asarray(self.sides) / 2
        return -half, half

    @property
    def smooth(self) -> bool:
        return False

    def scaled(self, s: float) -> "Rectangle":
        return Rectangle(tuple(s * a for a in self.sides))

    def describe(self) -> str:
        return "rectangle(" + ",".join(repr(a) for a in self.sides) + ")"


@dataclass(frozen=True)
class Ball:
    radius: float
    n: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise InvalidArgument(f"radius must be positive, got {self.radius!r}")
        if self.n not in (2, 3):
            raise UnsupportedDomain(f"balls are supported for n in {{2, 3}}, got n={self.n}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius**self.n

    @property
    def surface_measure(self) -> float:
        return self.n * unit_ball_volume(self.n) * self.radius ** (self.n - 1)

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        r = np.full(self.n, self.radius)
        return -r, r

    @property
    def smooth(self) -> bool:
        return True

    def scaled(self, s: float) -> "Ball":
        return Ball(s * self.radius, self.n)

    def describe(self) -> str:
        return f"ball(R={self.radius!r},n={self.n})"


DomainSpec = Union[Rectangle, Ball]


def volume(domain: DomainSpec) -> float:
    return domain.volume


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray  # (q, n)
    weights: np.ndarray  # (q,)
    degree: int

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


@dataclass(frozen=True, eq=False)
class BoundaryRule:
    """Boundary cubature.

    ``tangents`` has shape ``(q, n-1, n)``; ``curvature`` is the principal
    curvature ``kappa`` of the (umbilic) boundary, so that the derivative of
    the normal along a tangent ``t`` is ``kappa * t``. ``facet`` holds the
    facet index of each node for boxes (``2*axis + (sign > 0)``) and -1 for
    balls.
    """

    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    curvature: np.ndarray
    facet: np.ndarray
    degree: int = 0

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


@lru_cache(maxsize=None)
def _gauss_legendre(q: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(q)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_interval(q: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """``q``-point Gauss-Legendre rule on ``[a, b]`` (exact to degree 2q-1)."""
    x, w = _gauss_legendre(q)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _gauss_points_for(degree: int) -> int:
    return max(1, math.ceil((degree + 1) / 2))


def _tensor(nodes_1d, weights_1d):
    grids = np.meshgrid(*nodes_1d, indexing="ij")
    wgrids = np.meshgrid(*weights_1d, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, w


def _check_degree(degree):
    if int(degree) != degree or degree < 1:
        raise InvalidArgument(f"quadrature degree must be an integer >= 1, got {degree!r}")
    return int(degree)


def interior_quadrature(domain: DomainSpec, degree: int) -> QuadratureRule:
    """Interior rule integrating polynomials of total degree ``<= degree`` exactly.

    For balls the radial Jacobian ``r**(n-1)`` is folded into the weights of
    a Gauss-Legendre rule in ``r``; the azimuth uses the equispaced rule with
    ``degree + 1`` nodes (exact for trigonometric degree ``<= degree``) and,
    for ``n = 3``, the polar direction uses Gauss-Legendre in ``cos(theta)``.
    """
    degree = _check_degree(degree)
    if isinstance(domain, Rectangle):
        q = _gauss_points_for(degree)
        lo, hi = domain.bounding_box
        rules = [gauss_interval(q, a, b) for a, b in zip(lo, hi)]
        pts, w = _tensor([r[0] for r in rules], [r[1] for r in rules])
        return QuadratureRule(pts, w, degree)
    if isinstance(domain, Ball):
        n, R = domain.n, domain.radius
        r, wr = gauss_interval(_gauss_points_for(degree + n - 1), 0.0, R)
        wr = wr * r ** (n - 1)
        phi, wphi = _azimuth(degree)
        if n == 2:
            rr, pp = np.meshgrid(r, phi, indexing="ij")
            w = np.outer(wr, wphi).ravel()
            pts = np.stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel()], axis=1)
            return QuadratureRule(pts, w, degree)
        t, wt = _gauss_legendre(_gauss_points_for(degree))
        rr, tt, pp = np.meshgrid(r, t, phi, indexing="ij")
        st = np.sqrt(1.0 - tt**2)
        pts = np.stack(
            [(rr * st * np.cos(pp)).ravel(), (rr * st * np.sin(pp)).ravel(), (rr * tt).ravel()],
            axis=1,
        )
        w = (wr[:, None, None] * wt[None, :, None] * wphi[None, None, :]).ravel()
        return QuadratureRule(pts, w, degree)
    raise UnsupportedDomain(f"no interior rule for {domain!r}")


def _azimuth(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    m = degree + 1
    phi = 2.0 * np.pi * np.arange(m) / m
    return phi, np.full(m, 2.0 * np.pi / m)


def boundary_quadrature(domain: DomainSpec, degree: int) -> BoundaryRule:
    """Boundary rule exact for polynomials of degree ``<= degree`` on each facet.

    Box facets use tensor Gauss rules, so corner and edge points never appear.
    """
    degree = _check_degree(degree)
    if isinstance(domain, Rectangle):
        return _box_boundary(domain, degree)
    if isinstance(domain, Ball):
        return _sphere_boundary(domain, degree)
    raise UnsupportedDomain(f"no boundary rule for {domain!r}")


def _box_boundary(domain: Rectangle, degree: int) -> BoundaryRule:
    n = domain.n
    lo, hi = domain.bounding_box
    q = _gauss_points_for(degree)
    eye = np.eye(n)
    blocks = {k: [] for k in ("nodes", "weights", "normals", "tangents", "facet")}
    for axis in range(n):
        others = [i for i in range(n) if i != axis]
        rules = [gauss_interval(q, lo[i], hi[i]) for i in others]
        face_pts, face_w = _tensor([r[0] for r in rules], [r[1] for r in rules])
        for side, value in ((0, lo[axis]), (1, hi[axis])):
            pts = np.empty((len(face_w), n))
            pts[:, others] = face_pts
            pts[:, axis] = value
            sign = 1.0 if side else -1.0
            blocks["nodes"].append(pts)
            blocks["weights"].append(face_w)
            blocks["normals"].append(np.tile(sign * eye[axis], (len(face_w), 1)))
            blocks["tangents"].append(np.tile(eye[others], (len(face_w), 1, 1)))
            blocks["facet"].append(np.full(len(face_w), 2 * axis + side))
    cat = {k: np.concatenate(v) for k, v in blocks.items()}
    return BoundaryRule(
        nodes=cat["nodes"],
        weights=cat["weights"],
        normals=cat["normals"],
        tangents=cat["tangents"],
        curvature=np.zeros(len(cat["weights"])),
        facet=cat["facet"].astype(int),
        degree=degree,
    )


def _sphere_boundary(domain: Ball, degree: int) -> BoundaryRule:
    n, R = domain.n, domain.radius
    phi, wphi = _azimuth(degree)
    if n == 2:
        c, s = np.cos(phi), np.sin(phi)
        normals = np.stack([c, s], axis=1)
        tangents = np.stack([-s, c], axis=1)[:, None, :]
        weights = R * wphi
    else:
        t, wt = _gauss_legendre(_gauss_points_for(degree))
        tt, pp = np.meshgrid(t, phi, indexing="ij")
        tt, pp = tt.ravel(), pp.ravel()
        st = np.sqrt(1.0 - tt**2)
        cp, sp = np.cos(pp), np.sin(pp)
        normals = np.stack([st * cp, st * sp, tt], axis=1)
        e_theta = np.stack([tt * cp, tt * sp, -st], axis=1)
        e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
        tangents = np.stack([e_theta, e_phi], axis=1)
        weights = R**2 * np.outer(wt, wphi).ravel()
    return BoundaryRule(
        nodes=R * normals,
        weights=weights,
        normals=normals,
        tangents=tangents,
        curvature=np.full(len(weights), 1.0 / R),
        facet=np.full(len(weights), -1),
        degree=degree,
    )
