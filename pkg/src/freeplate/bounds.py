"""Kroger-type upper bounds for free-plate eigenvalues.

With ``c = w_n |Omega| / (2 pi)^n`` the next-eigenvalue bound for ``tau > 0``
is ``min F(r)`` over ``r > r_min = 2 pi (m / (w_n |Omega|))^(1/n)`` where

    F(r) = n c (r^(n+4)/(n+4) + tau r^(n+2)/(n+2)) / (c r^n - m).

For ``tau = 0`` the minimiser is ``r0 = 2 pi (m (n+4) / (4 w_n |Omega|))^(1/n)``
and ``F(r0) = r0^4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

from .errors import InvalidArgument, OutsideDomain, WrongBranch
from .geometry import unit_ball_volume

TWO_PI = 2.0 * math.pi
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundInputs:
    n: int
    volume: float
    tau: float
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArgument(f"n must be an integer >= 2, got {self.n!r}")
        if not (math.isfinite(self.volume) and self.volume > 0):
            raise InvalidArgument(f"volume must be positive, got {self.volume!r}")
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise InvalidArgument(f"tau must be >= 0, got {self.tau!r}")
        if int(self.m) != self.m or self.m < 0:
            raise InvalidArgument(f"m must be an integer >= 0, got {self.m!r}")

    @property
    def scaled_volume(self) -> float:
        """``w_n |Omega|``."""
        return unit_ball_volume(self.n) * self.volume

    @property
    def r_min(self) -> float:
        return TWO_PI * (self.m / self.scaled_volume) ** (1.0 / self.n)


@dataclass(frozen=True)
class MinimizationTrace:
    r_star: float
    F_star: float
    lo: float
    hi: float
    iterations: int
    converged: bool
    attained: bool = True  # False for m = 0, where the infimum sits at r -> 0+


def sum_bound(inp: BoundInputs) -> float:
    """Upper bound for ``Gamma_1 + ... + Gamma_m``.

    Uses the exponent ``(n+4)/n`` on ``m`` in the leading term; the value is
    ``(2pi)^4 n/(n+4) (w|O|)^(-4/n) m^((n+4)/n) + tau (2pi)^2 n/(n+2) (w|O|)^(-2/n) m^((n+2)/n)``.
    """
    if inp.m < 1:
        raise InvalidArgument("sum_bound needs m >= 1 (the empty sum is 0)")
    n, wv, m = inp.n, inp.scaled_volume, inp.m
    lead = TWO_PI**4 * n / (n + 4) * wv ** (-4.0 / n) * m ** ((n + 4) / n)
    tension = inp.tau * TWO_PI**2 * n / (n + 2) * wv ** (-2.0 / n) * m ** ((n + 2) / n)
    return lead + tension


def F_eval(inp: BoundInputs, r: float) -> float:
    if inp.m >= 1 and not r > inp.r_min:
        raise OutsideDomain(f"F(r) needs r > r_min = {inp.r_min!r}, got r = {r!r}")
    if inp.m == 0 and not r > 0:
        raise OutsideDomain(f"F(r) needs r > 0, got r = {r!r}")
    n = inp.n
    c = inp.scaled_volume / TWO_PI**n
    num = n * c * (r ** (n + 4) / (n + 4) + inp.tau * r ** (n + 2) / (n + 2))
    return num / (c * r**n - inp.m)


def golden_section(
    f: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-12, max_iter: int = 500
) -> Tuple[float, float, int, bool]:
    """Minimise a unimodal ``f`` on ``[lo, hi]`` by golden-section search in ``log r``.

    Returns ``(x_star, f_star, iterations, converged)``.
    """
    a, b = math.log(lo), math.log(hi)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(math.exp(x1)), f(math.exp(x2))
    it = 0
    while b - a > rtol and it < max_iter:
        it += 1
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(math.exp(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(math.exp(x2))
    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    return math.exp(x), fx, it, b - a <= rtol


def minimize_F(inp: BoundInputs, delta: float = 1e-6, rtol: float = 1e-12) -> MinimizationTrace:
    """Bracket and minimise ``F`` on ``(r_min, inf)`` for ``m >= 1``.

    The bracket starts at ``r_min (1 + delta)``; the upper end doubles until
    ``F`` increases.
    """
    if inp.m < 1:
        raise InvalidArgument("minimize_F needs m >= 1")
    f = lambda r: F_eval(inp, r)  # noqa: E731
    rs = [inp.r_min * (1.0 + delta)]
    fs = [f(rs[0])]
    while True:
        rs.append(2.0 * rs[-1])
        fs.append(f(rs[-1]))
        if fs[-1] > fs[-2]:
            break
        if len(rs) > 200:
            raise RuntimeError("failed to bracket the minimum of F")
    lower, upper = rs[max(len(rs) - 3, 0)], rs[-1]
    r, fr, it, ok = golden_section(f, lower, upper, rtol=rtol)
    return MinimizationTrace(r, fr, lower, upper, it, ok)


def next_bound_tau_positive(inp: BoundInputs) -> Tuple[float, MinimizationTrace]:
    """Bound for ``Gamma_{m+1}`` when ``tau > 0``: the minimum of ``F``.

    For ``m = 0`` the infimum is 0, approached as ``r -> 0+`` and not attained.
    """
    if not inp.tau > 0:
        raise WrongBranch("next_bound_tau_positive requires tau > 0")
    if inp.m == 0:
        return 0.0, MinimizationTrace(0.0, 0.0, 0.0, 0.0, 0, True, attained=False)
    trace = minimize_F(inp)
    return trace.F_star, trace


def stationary_radius(inp: BoundInputs) -> float:
    """``r0``, the zero of ``F'`` when ``tau = 0``."""
    return TWO_PI * (inp.m * (inp.n + 4) / (4.0 * inp.scaled_volume)) ** (1.0 / inp.n)


def next_bound_tau_zero(inp: BoundInputs) -> float:
    if inp.tau != 0:
        raise WrongBranch("next_bound_tau_zero requires tau == 0")
    return TWO_PI**4 * (inp.m * (inp.n + 4) / (4.0 * inp.scaled_volume)) ** (4.0 / inp.n)


def next_bound(inp: BoundInputs) -> Tuple[float, str, MinimizationTrace | None]:
    """Dispatch on the sign of ``tau``; returns ``(value, branch, trace)``."""
    if inp.tau > 0:
        value, trace = next_bound_tau_positive(inp)
        return value, "tau_positive", trace
    return next_bound_tau_zero(inp), "tau_zero", None
