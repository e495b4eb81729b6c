"""Scalar Riemann solutions by envelope construction, the two admissible
solutions of the radial vector problem, the smooth rotating family, and a
first-order Godunov scheme as an independent oracle.

For a scalar flux g and states sl != sr the entropy solution of the Riemann
problem is read off the lower convex envelope of g on [sl, sr] (sl < sr) or
the upper concave envelope on [sr, sl] (sl > sr): linear pieces are shocks,
pieces where the envelope touches the flux are rarefactions.  For polynomial
fluxes of degree <= 3 every tangency point is an exact rational (the tangency
polynomial from a state carries a double root there, and deflating it leaves
a linear factor), so the emitted waves are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .exactnum import as_rational
from .flux import ScalarFlux1D, polynomial_flux


class RiemannError(ValueError):
    pass


@dataclass(frozen=True)
class Shock:
    left: object
    right: object
    speed: object

    def rh_residual(self, flux) -> float:
        lhs = self.speed * (self.left - self.right)
        rhs = flux.value(self.left) - flux.value(self.right)
        return abs(float(lhs - rhs))


@dataclass(frozen=True)
class Rarefaction:
    left: object
    right: object
    speed_lo: object
    speed_hi: object


@dataclass(frozen=True)
class Contact:
    left: object
    right: object
    speed: object


def _speed_range(wave):
    if isinstance(wave, Rarefaction):
        return (wave.speed_lo, wave.speed_hi)
    return (wave.speed, wave.speed)


class WaveFan:
    """Self-similar solution: ordered waves with nondecreasing speeds."""

    def __init__(self, waves, flux: Optional[ScalarFlux1D] = None):
        self.waves = list(waves)
        self.flux = flux
        prev = None
        for w in self.waves:
            lo, hi = _speed_range(w)
            if prev is not None and lo < prev:
                raise RiemannError(f"wave speeds decrease: {self.waves}")
            prev = hi

    @property
    def left_state(self):
        return self.waves[0].left if self.waves else None

    @property
    def right_state(self):
        return self.waves[-1].right if self.waves else None

    def sample(self, xi, constant=None) -> float:
        """Value at similarity coordinate xi = x/t (right state on wave
        speeds themselves, matching the half-open convention)."""
        if not self.waves:
            if constant is None:
                raise RiemannError("empty fan needs the constant state")
            return float(constant)
        xi = float(xi)
        state = self.waves[0].left
        for w in self.waves:
            lo, hi = (float(s) for s in _speed_range(w))
            if xi < lo:
                return float(state)
            if isinstance(w, Rarefaction) and xi < hi:
                return self._invert_rarefaction(w, xi)
            state = w.right
        return float(state)

    def _invert_rarefaction(self, w, xi) -> float:
        g = self.flux
        a, b = float(w.left), float(w.right)
        lo, hi = min(a, b), max(a, b)
        # g' is monotone on the wave interval; bisect g'(v) = xi
        f_lo = g.deriv(lo) - xi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            val = g.deriv(mid) - xi
            if val == 0:
                return mid
            if (val < 0) == (f_lo < 0):
                lo, f_lo = mid, val
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, abs(hi)):
                break
        return 0.5 * (lo + hi)

    def csv_rows(self):
        rows = []
        for w in self.waves:
            kind = type(w).__name__.lower()
            lo, hi = _speed_range(w)
            rows.append((kind, w.left, w.right, lo, hi))
        return rows


def _poly_sub_state(coeffs, a):
    """Synthetic division of a polynomial (low-to-high coeffs) by (s - a);
    the remainder must vanish."""
    hi_first = list(reversed(coeffs))
    out = [hi_first[0]]
    for c in hi_first[1:]:
        out.append(c + a * out[-1])
    rem = out.pop()
    if rem != 0:
        raise RiemannError("deflation of a non-root")
    return tuple(reversed(out))


def _tangency_from(flux: ScalarFlux1D, anchor, lo, hi):
    """The interior point s where the chord from (anchor, g(anchor)) touches
    the flux tangentially: root of g(anchor) - g(s) - g'(s)(anchor - s) in
    (lo, hi).  Exact for polynomials of degree <= 3, bisection otherwise."""
    if flux.coeffs is not None:
        cs = flux.coeffs
        deg = len(cs) - 1
        if deg > 3:
            raise RiemannError("closed-form tangency implemented up to cubic")
        a = as_rational(anchor)
        # T(s) = g(a) - g(s) - g'(s)(a - s); double root at s = a
        # build coefficients of T in s
        dcs = tuple(i * c for i, c in enumerate(cs))[1:]
        T = [Fraction(0)] * (deg + 1)
        T[0] += flux.value(a)
        for i, c in enumerate(cs):
            T[i] -= c
        # -g'(s) * a  and  + g'(s) * s
        for i, c in enumerate(dcs):
            T[i] -= c * a
            T[i + 1] += c
        red = _poly_sub_state(tuple(T), a)
        red = _poly_sub_state(red, a)
        red = [c for c in red]
        if len(red) == 1 or all(c == 0 for c in red[1:]):
            return None  # no interior tangency (flux convex/concave)
        if len(red) == 2:
            s = -red[0] / red[1]
            return s if lo < s < hi else None
        raise RiemannError("unexpected tangency degree")
    # callable fallback: bisection on chord slope minus derivative
    a = float(anchor)

    def h(s):
        return (flux.value(a) - flux.value(s)) / (a - s) - flux.deriv(s)

    lo_f, hi_f = float(lo) + 1e-12, float(hi) - 1e-12
    va, vb = h(lo_f), h(hi_f)
    if va == 0:
        return lo_f
    if va * vb > 0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo_f + hi_f)
        vm = h(mid)
        if vm == 0:
            break
        if (vm < 0) == (va < 0):
            lo_f, va = mid, vm
        else:
            hi_f = mid
        if hi_f - lo_f < 1e-13 * max(1.0, abs(hi_f)):
            break
    return 0.5 * (lo_f + hi_f)


def _chord_is_envelope(flux, lo, hi, upper: bool) -> bool:
    """Whether the chord of the flux over [lo, hi] is the envelope: flux
    stays above it (lower envelope, upper=False) or below it (upper=True).
    Exact for polynomials <= cubic via deflation by both endpoint roots."""
    if flux.coeffs is not None and len(flux.coeffs) <= 4:
        slope = (flux.value(hi) - flux.value(lo)) / (hi - lo)
        g = list(flux.coeffs) + [Fraction(0)] * (4 - len(flux.coeffs))
        g = g[:4]
        g[0] -= flux.value(lo) - slope * lo
        g[1] -= slope
        q = _poly_sub_state(tuple(g), as_rational(lo))
        q = _poly_sub_state(q, as_rational(hi))
        # g = (s-lo)(s-hi) q(s); (s-lo)(s-hi) < 0 strictly inside
        vals = [sum(c * p ** i for i, c in enumerate(q)) for p in (lo, hi)]
        if upper:
            return all(v >= 0 for v in vals)
        return all(v <= 0 for v in vals)
    xs = np.linspace(float(lo), float(hi), 257)[1:-1]
    gv = np.array([flux.value(x) for x in xs], dtype=float)
    ch = np.interp(xs, [float(lo), float(hi)],
                   [float(flux.value(lo)), float(flux.value(hi))])
    return bool(np.all(ch - gv >= -1e-12)) if upper else bool(np.all(gv - ch >= -1e-12))


def _is_rarefaction_leg(flux, a, b, increasing_data: bool) -> bool:
    """f' must increase along the traversal a -> b (so the fan opens)."""
    if flux.coeffs is not None and len(flux.coeffs) <= 4:
        c2 = flux.coeffs[2] if len(flux.coeffs) > 2 else Fraction(0)
        c3 = flux.coeffs[3] if len(flux.coeffs) > 3 else Fraction(0)
        second = [2 * c2 + 6 * c3 * p for p in (a, b)]  # endpoints of linear g''
        if increasing_data:
            return all(v >= 0 for v in second)
        return all(v <= 0 for v in second)
    xs = np.linspace(float(a), float(b), 65)
    dv = np.array([flux.deriv(x) for x in xs])
    return bool(np.all(np.diff(dv) >= -1e-12)) if (float(b) > float(a)) \
        else bool(np.all(np.diff(dv) <= 1e-12))


def _chord_slope(flux, a, b):
    return (flux.value(a) - flux.value(b)) / (a - b)


def _state(x):
    if isinstance(x, (int, Fraction, str)):
        return as_rational(x)
    return Fraction(float(x))


def scalar_riemann(flux: ScalarFlux1D, rho_l, rho_r) -> WaveFan:
    """Entropy solution of the scalar Riemann problem via the envelope."""
    exact = flux.coeffs is not None
    sl = _state(rho_l) if exact else float(rho_l)
    sr = _state(rho_r) if exact else float(rho_r)
    if sl == sr:
        return WaveFan([], flux)
    inc = sl < sr
    lo, hi = (sl, sr) if inc else (sr, sl)
    upper = not inc  # decreasing data uses the concave (upper) envelope

    def shock(a, b):
        return Shock(a, b, _chord_slope(flux, a, b))

    def rarefaction(a, b):
        return Rarefaction(a, b, flux.deriv(a), flux.deriv(b))

    # single shock: the chord is the whole envelope
    if _chord_is_envelope(flux, lo, hi, upper):
        return WaveFan([shock(sl, sr)], flux)
    # single rarefaction: the flux is its own envelope
    if _is_rarefaction_leg(flux, sl, sr, inc):
        return WaveFan([rarefaction(sl, sr)], flux)
    # shock attached to a rarefaction: tangency from the left state
    s = _tangency_from(flux, sl, lo, hi)
    if s is not None and _is_rarefaction_leg(flux, s, sr, inc) \
            and _chord_is_envelope(flux, *sorted((sl, s)), upper):
        return WaveFan([shock(sl, s), rarefaction(s, sr)], flux)
    # rarefaction attached to a shock: tangency from the right state
    s = _tangency_from(flux, sr, lo, hi)
    if s is not None and _is_rarefaction_leg(flux, sl, s, inc) \
            and _chord_is_envelope(flux, *sorted((s, sr)), upper):
        return WaveFan([rarefaction(sl, s), shock(s, sr)], flux)
    raise RiemannError(
        f"envelope construction failed for states {rho_l} -> {rho_r}; "
        f"flux has more structure than one inflection")


def oleinik_ok(shock: Shock, flux, points: int = 100, tol: float = 1e-12) -> bool:
    """Chord condition at interior points: every partial chord from the left
    state must be at least the shock speed for decreasing data, at most for
    increasing data."""
    a, b = float(shock.left), float(shock.right)
    s = float(shock.speed)
    vs = np.linspace(a, b, points + 2)[1:-1]
    for v in vs:
        part = (float(flux.value(shock.left)) - float(flux.value(v))) / (a - v)
        if a > b and part < s - tol:
            return False
        if a < b and part > s + tol:
            return False
    return True


def godunov_flux_factory(flux: ScalarFlux1D):
    """Exact Riemann numerical flux for a scalar law (monotone-envelope
    evaluation): min of the flux over [a, b] when a <= b, max over [b, a]
    otherwise.  Interior extrema come from the critical points of the flux."""
    crits = []
    if flux.coeffs is not None:
        dcs = [float(i * c) for i, c in enumerate(flux.coeffs)][1:]
        if len(dcs) >= 2 and any(c != 0 for c in dcs[1:]):
            roots = np.roots(list(reversed(dcs)))
            crits = [float(r.real) for r in roots if abs(r.imag) < 1e-12]

    def numerical_flux(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        fa = flux_vals(a)
        fb = flux_vals(b)
        fmin = np.minimum(fa, fb)
        fmax = np.maximum(fa, fb)
        for c in crits:
            inside = (lo < c) & (c < hi)
            if np.any(inside):
                fc = flux_vals(np.full(1, c))[0]
                fmin = np.where(inside, np.minimum(fmin, fc), fmin)
                fmax = np.where(inside, np.maximum(fmax, fc), fmax)
        return np.where(a <= b, fmin, fmax)

    def flux_vals(u: np.ndarray) -> np.ndarray:
        if flux.coeffs is not None:
            acc = np.zeros_like(u, dtype=float)
            for c in reversed(flux.coeffs):
                acc = acc * u + float(c)
            return acc
        return np.array([flux.value(x) for x in np.atleast_1d(u)], dtype=float)

    return numerical_flux


def godunov_solve(flux: ScalarFlux1D, rho_l, rho_r, xlim=(-2.0, 4.0),
                  ncells: int = 4000, T: float = 1.0, cfl: float = 0.45,
                  x_jump: float = 0.0):
    """First-order finite volume run of the Riemann problem; returns
    (cell centers, cell values at time T)."""
    xl, xr = float(xlim[0]), float(xlim[1])
    dx = (xr - xl) / ncells
    x = xl + dx * (np.arange(ncells) + 0.5)
    u = np.where(x < x_jump, float(rho_l), float(rho_r))
    numflux = godunov_flux_factory(flux)
    span = np.linspace(min(float(rho_l), float(rho_r)),
                       max(float(rho_l), float(rho_r)), 101)
    amax = max(abs(float(flux.deriv(v))) for v in span)
    if amax == 0:
        return x, u
    dt_max = cfl * dx / amax
    t = 0.0
    while t < T - 1e-14:
        dt = min(dt_max, T - t)
        ue = np.concatenate(([u[0]], u, [u[-1]]))
        F = numflux(ue[:-1], ue[1:])
        u = u - (dt / dx) * (F[1:] - F[:-1])
        t += dt
    return x, u


def fan_l1_error(fan: WaveFan, flux, x: np.ndarray, u: np.ndarray,
                 T: float, constant=None) -> float:
    ref = np.array([fan.sample(xi / T, constant=constant) for xi in x])
    dx = x[1] - x[0]
    return float(np.sum(np.abs(u - ref)) * dx)


@dataclass
class VectorRiemannSolution:
    """Plane-valued self-similar solution: either a scalar fan embedded along
    a fixed direction, or a single angular contact."""

    kind: str  # "embedding" | "contact"
    left: np.ndarray
    right: np.ndarray
    direction: np.ndarray | None = None
    fan: WaveFan | None = None
    contact_speed: object = None
    radial: ScalarFlux1D | None = None

    def sample(self, xi) -> np.ndarray:
        if self.kind == "embedding":
            if not self.fan.waves:
                return self.left
            return self.fan.sample(xi) * self.direction
        return self.left if float(xi) < float(self.contact_speed) else self.right

    def waves(self):
        if self.kind == "embedding":
            return list(self.fan.waves)
        return [Contact(tuple(self.left), tuple(self.right), self.contact_speed)]

    def rh_residual(self) -> float:
        """Max Rankine-Hugoniot defect over the discontinuities."""
        worst = 0.0
        if self.kind == "embedding":
            g = self.fan.flux
            for w in self.fan.waves:
                if isinstance(w, Shock):
                    worst = max(worst, w.rh_residual(g))
            return worst
        r = float(np.linalg.norm(self.left))
        f_r = float(self.radial.value(r))
        lhs = float(self.contact_speed) * (self.left - self.right)
        rhs = f_r * self.left - f_r * self.right
        return float(np.max(np.abs(lhs - rhs)))


def embed_scalar_flux(f: ScalarFlux1D, nonneg: bool) -> ScalarFlux1D:
    """The signed-magnitude flux g(s) = f(|s|) s along a fixed direction.
    Polynomial when f has only even powers, or when the states stay >= 0."""
    if f.coeffs is not None:
        if all(c == 0 for i, c in enumerate(f.coeffs) if i % 2 == 1):
            out = [Fraction(0)] * (len(f.coeffs) + 1)
            for i, c in enumerate(f.coeffs):
                out[i + 1] = c
            return polynomial_flux(out)
        if nonneg:
            out = [Fraction(0)] + list(f.coeffs)
            return polynomial_flux(out)

    def val(s):
        return f.value(abs(s)) * s

    def der(s):
        return f.value(abs(s)) + f.deriv(abs(s)) * abs(s)

    return ScalarFlux1D(value=val, deriv=der)


def vector_riemann_scalar_embedding(f: ScalarFlux1D, ul, ur) -> VectorRiemannSolution:
    """Both states on one line through the origin: solve the signed-magnitude
    scalar problem and embed it back along that line.  Axis-aligned rational
    data keeps the whole fan exact."""
    ulf = np.asarray(ul, dtype=float)
    urf = np.asarray(ur, dtype=float)
    cross = ulf[0] * urf[1] - ulf[1] * urf[0]
    if abs(cross) > 1e-14 * max(1.0, float(np.linalg.norm(ulf) * np.linalg.norm(urf))):
        raise RiemannError("states are not parallel; use the contact solution")
    norms = np.linalg.norm(ulf), np.linalg.norm(urf)
    base = ulf if norms[0] >= norms[1] else urf
    if float(np.linalg.norm(base)) == 0:
        raise RiemannError("zero states have no direction")
    axis_aligned = (ulf[0] == 0 and urf[0] == 0) or (ulf[1] == 0 and urf[1] == 0)
    if axis_aligned:
        axis = 1 if ulf[0] == 0 else 0
        e = np.zeros(2)
        e[axis] = 1.0
        a = _state(ul[axis])
        b = _state(ur[axis])
    else:
        e = base / float(np.linalg.norm(base))
        a, b = float(np.dot(ulf, e)), float(np.dot(urf, e))
    g = embed_scalar_flux(f, nonneg=min(float(a), float(b)) >= 0)
    fan = scalar_riemann(g, a, b)
    return VectorRiemannSolution(kind="embedding", left=ulf, right=urf,
                                 direction=e, fan=fan, radial=f)


def vector_riemann_contact(f: ScalarFlux1D, ul, ur) -> VectorRiemannSolution:
    """The purely angular jump: both magnitudes equal, one contact moving at
    the transverse characteristic speed f(|u|)."""
    ulf = np.asarray(ul, dtype=float)
    urf = np.asarray(ur, dtype=float)
    rl, rr = float(np.linalg.norm(ulf)), float(np.linalg.norm(urf))
    if abs(rl - rr) > 1e-12 * max(1.0, rl):
        raise RiemannError("contact solution needs equal magnitudes")
    r = rl
    if f.coeffs is not None:
        # keep the speed exact when the magnitude is (axis-aligned) rational
        for v in (ul, ur):
            if v[0] == 0 or v[1] == 0:
                try:
                    r = abs(_state(v[0] if v[1] == 0 else v[1]))
                    break
                except (TypeError, ValueError):
                    pass
    return VectorRiemannSolution(kind="contact", left=ulf, right=urf,
                                 contact_speed=f.value(r), radial=f)


def smooth_angle_step() -> Callable[[float], float]:
    """C-infinity profile locked at 0 for s <= 0 and pi for s >= 1."""

    def bump(s):
        return math.exp(-1.0 / s) if s > 0 else 0.0

    def theta(s):
        a, b = bump(s), bump(1.0 - s)
        return math.pi * (a / (a + b)) if (a + b) else 0.0

    return theta


@dataclass
class TravelingWave:
    """The smooth rotating profile u(t, x) = (cos th(n(x-t)), sin th(n(x-t))):
    unit magnitude, so the radial flux acts as pure unit-speed translation
    whenever f(1) = 1."""

    f: ScalarFlux1D
    theta: Callable[[float], float]
    n: int

    def u(self, t: float, x: float) -> np.ndarray:
        ph = self.theta(self.n * (x - t))
        return np.array([math.cos(ph), math.sin(ph)])

    def _G(self, t, x):
        w = self.u(t, x)
        r = float(np.linalg.norm(w))
        return float(self.f.value(r)) * w

    def residual(self, t: float, xs, h: float) -> float:
        """Max norm over xs of the central-difference residual of
        u_t + (f(|u|)u)_x."""
        worst = 0.0
        for x in np.atleast_1d(xs):
            ut = (self.u(t + h, x) - self.u(t - h, x)) / (2 * h)
            gx = (self._G(t, x + h) - self._G(t, x - h)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(ut + gx))))
        return worst
