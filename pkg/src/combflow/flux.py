"""Piecewise-affine plane fluxes F(rho) = f(rho) rho, scalar 1D fluxes, and
the Jacobian eigenstructure of radial systems u_t + div(f(|u|)u) = 0.

The counterexample flux used throughout the comb scenarios is

    F(rho) = 0            for rho <= 1
           = (1-rho) e1   for 1 <= rho <= 2
           = (rho-3) e1   for 2 <= rho <= 3
           = (rho-3) e2   for rho >= 3

so f(2) = -e1/2, f(3) = 0, f(4) = e2/4.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exactnum import Rational, as_rational

Vec2 = tuple


class FluxError(ValueError):
    pass


class PiecewiseAffineFlux2:
    """Globally Lipschitz vector flux on rho >= 0, affine between breakpoints,
    extended affinely with a fixed slope past the last breakpoint.

    breakpoints: sorted [(rho_i, (F1_i, F2_i))], rho_0 == 0.
    tail_slope: dF/drho for rho beyond the last breakpoint.
    """

    def __init__(self, breakpoints, tail_slope):
        pts = [(as_rational(r), (as_rational(v[0]), as_rational(v[1])))
               for r, v in breakpoints]
        if not pts or pts[0][0] != 0:
            raise FluxError("breakpoints must start at rho = 0")
        for (r0, _), (r1, _) in zip(pts, pts[1:]):
            if not r0 < r1:
                raise FluxError("breakpoints must be strictly increasing")
        self._rhos = [r for r, _ in pts]
        self._vals = [v for _, v in pts]
        self._tail = (as_rational(tail_slope[0]), as_rational(tail_slope[1]))

    def breakpoints(self):
        return list(zip(self._rhos, self._vals))

    def _segment(self, rho):
        """Index i such that rho lies in [rho_i, rho_{i+1}) (or the tail)."""
        return bisect_right(self._rhos, rho) - 1

    def eval_F(self, rho) -> Vec2:
        rho = as_rational(rho)
        if rho < 0:
            raise FluxError(f"flux domain is rho >= 0, got {rho}")
        i = self._segment(rho)
        r0, v0 = self._rhos[i], self._vals[i]
        if i + 1 < len(self._rhos):
            r1, v1 = self._rhos[i + 1], self._vals[i + 1]
            w = (rho - r0) / (r1 - r0)
            return (v0[0] + w * (v1[0] - v0[0]), v0[1] + w * (v1[1] - v0[1]))
        d = rho - r0
        return (v0[0] + d * self._tail[0], v0[1] + d * self._tail[1])

    def eval_f(self, rho) -> Vec2:
        rho = as_rational(rho)
        if rho <= 0:
            raise FluxError(f"f = F/rho needs rho > 0, got {rho}")
        F = self.eval_F(rho)
        return (F[0] / rho, F[1] / rho)

    def eval_Fprime(self, rho, side=None) -> Vec2:
        """Slope on the segment containing rho.  At a breakpoint the two
        one-sided slopes differ, so a side ('left'/'right') is required."""
        rho = as_rational(rho)
        if rho < 0:
            raise FluxError(f"flux domain is rho >= 0, got {rho}")
        at_break = rho in self._rhos
        if at_break and side is None:
            raise FluxError(f"derivative at breakpoint rho={rho} needs side=")
        i = self._segment(rho)
        if at_break and side == "left":
            if i == 0:
                raise FluxError("no left derivative at rho = 0")
            i -= 1
        return self._slope(i)

    def _slope(self, i):
        r0, v0 = self._rhos[i], self._vals[i]
        if i + 1 < len(self._rhos):
            r1, v1 = self._rhos[i + 1], self._vals[i + 1]
            d = r1 - r0
            return ((v1[0] - v0[0]) / d, (v1[1] - v0[1]) / d)
        return self._tail

    def lipschitz_bound(self) -> Rational:
        """Max of |slope|_inf over segments; finite by construction."""
        best = as_rational(0)
        for i in range(len(self._rhos)):
            s = self._slope(i)
            best = max(best, abs(s[0]), abs(s[1]))
        return best


def counterexample_flux() -> PiecewiseAffineFlux2:
    """The hard-coded four-branch flux listed in the module docstring."""
    return PiecewiseAffineFlux2(
        breakpoints=[(0, (0, 0)), (1, (0, 0)), (2, (-1, 0)), (3, (0, 0))],
        tail_slope=(0, 1),
    )


@dataclass(frozen=True)
class ScalarFlux1D:
    """Scalar flux with an explicit derivative; optionally a polynomial
    (coeffs low-to-high) which enables closed-form envelope tangency."""

    value: Callable[[float], float]
    deriv: Callable[[float], float]
    coeffs: tuple | None = None

    def __call__(self, s):
        return self.value(s)


def polynomial_flux(coeffs: Sequence) -> ScalarFlux1D:
    cs = tuple(as_rational(c) for c in coeffs)

    def val(s):
        acc = 0
        for c in reversed(cs):
            acc = acc * s + c
        return acc

    dcs = tuple(i * c for i, c in enumerate(cs))[1:]

    def der(s):
        acc = 0
        for c in reversed(dcs):
            acc = acc * s + c
        return acc

    return ScalarFlux1D(value=val, deriv=der, coeffs=cs)


@dataclass(frozen=True)
class RadialEigen:
    lam: float
    eigvec: np.ndarray
    lam_star: float
    multiplicity: int


def jacobian_eigen(f: ScalarFlux1D, u) -> RadialEigen:
    """Eigenstructure of the quasilinear matrix A(u) = f(r) I + f'(r) (u x u)/r,
    r = |u| > 0: eigenvalue f(r) + f'(r) r on span{u}, and f(r) with
    multiplicity n-1 on the orthogonal complement.
    """
    u = np.asarray(u, dtype=float)
    r = float(np.linalg.norm(u))
    if r == 0.0:
        raise FluxError("eigenstructure is singular at u = 0")
    fr = float(f.value(r))
    fpr = float(f.deriv(r))
    return RadialEigen(
        lam=fr + fpr * r,
        eigvec=u / r,
        lam_star=fr,
        multiplicity=len(u) - 1,
    )


def radial_map_jacobian_fd(f: ScalarFlux1D, u, h=1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of u -> f(|u|) u; the independent
    check for jacobian_eigen."""
    u = np.asarray(u, dtype=float)
    n = len(u)

    def G(w):
        r = np.linalg.norm(w)
        return float(f.value(r)) * w

    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (G(u + e) - G(u - e)) / (2 * h)
    return J
