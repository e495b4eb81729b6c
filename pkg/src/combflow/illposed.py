"""The sequence of oscillating solutions and its quantitative pathology:
initial data that converge in L1 on bounded sets while the solutions at a
later time stay a fixed L1 distance apart, plus the weak limit of the
oscillations and the flux threshold deciding whether that limit is itself a
weak solution.

The vector field is u = rho (cos theta, sin theta).  The magnitude rho is the
comb field of the requested depth; the angle is transported along the exact
particle flow, starting from the stripe pattern +-beta that alternates with
the integer parity of x2.  After the combs of levels 0..n have passed a
point, the stripe parity has been promoted from digit 0 to digit n+1 of x2,
so the angle pattern at the sampled time alternates on stripes of height
2**-(n+2)-per-half-period (pitch 2**-(n+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .combs import (CombLevel, CombSpec, comb_covering, build_comb,
                    KIND_LEFT, KIND_UP, KIND_UP_HALF)
from .exactnum import Rational, as_rational, digit, half_pow, ifloor
from .field import DensityField
from .flux import counterexample_flux
from .geometry import Point2, Rect, RectUnion, intersect_rect_box
from .tracer import inverse_flow


class IllposedError(ValueError):
    pass


@dataclass(frozen=True)
class AngularData:
    """Stripe initial angle: +beta where floor(x2) is even, -beta where odd.
    Stored through cos(beta); keep it rational when the flux threshold must
    be decided exactly."""

    cos_beta: object  # Fraction (exact) or float
    beta: float

    @classmethod
    def from_cos(cls, c) -> "AngularData":
        c = as_rational(c)
        if not (0 < c < 1):
            raise IllposedError("need 0 < cos(beta) < 1 for beta in (0, pi/2)")
        return cls(cos_beta=c, beta=math.acos(float(c)))

    @classmethod
    def from_radians(cls, beta: float) -> "AngularData":
        if not (0.0 < beta < math.pi / 2):
            raise IllposedError("beta must lie in (0, pi/2)")
        return cls(cos_beta=math.cos(beta), beta=beta)

    @property
    def sin_beta(self) -> float:
        return math.sin(self.beta)

    def initial_sign(self, y2) -> int:
        return 1 if ifloor(y2) % 2 == 0 else -1

    def unit_vector(self, sign: int):
        return np.array([float(self.cos_beta), sign * self.sin_beta])


@dataclass(frozen=True)
class SolutionSample:
    t: Rational
    x: Point2
    rho: Rational
    sign: int
    theta: float
    u: np.ndarray
    flags: frozenset


def build_rho_n(n: int, tooth_count: int, start_index: int = 0) -> DensityField:
    """The depth-n comb field literally: for each level k <= n the three comb
    families, each truncated to tooth_count teeth from start_index."""
    if n < 0:
        return DensityField(3, [])
    patches = []
    for k in range(n + 1):
        for kind in (KIND_UP, KIND_LEFT, KIND_UP_HALF):
            patches.append(build_comb(CombSpec(
                k=k, kind=kind, tooth_count=tooth_count, start_index=start_index)))
    return DensityField(3, patches)


def field_for_box(n: int, box: Rect, max_left_shift=None) -> DensityField:
    """Depth-n comb field whose teeth cover every backward trajectory from
    the box: x1 covers the box plus the total possible left drift, x2 covers
    the box plus the total upward drift."""
    if n < 0:
        return DensityField(3, [])
    drift = sum((2 * half_pow(k) for k in range(n + 1)), Fraction(0))
    left = drift if max_left_shift is None else as_rational(max_left_shift)
    patches = []
    lo1, hi1 = box.lo[0] - left - 1, box.hi[0] + 1
    lo2, hi2 = box.lo[1] - 1, box.hi[1] + drift + 1
    for k in range(n + 1):
        level = CombLevel.build(k, x1_cover=(lo1, hi1), x2_cover=(lo2, hi2))
        patches.extend(level.patches())
    fld = DensityField(3, patches)
    rep = fld.validate_disjoint()
    if not rep.ok:
        raise IllposedError(f"comb levels overlap: {rep.violations}")
    return fld


def evaluate_u(field: DensityField, angle: AngularData, velocity_fn, t, x: Point2,
               stripe_pitch: Optional[Fraction] = None) -> SolutionSample:
    """Three-step evaluation: magnitude from the field, angle transported
    backwards along the exact flow, trigonometry only at the very end."""
    t = as_rational(t)
    rho = field.eval_rho(t, x)
    inv = inverse_flow(field, velocity_fn, x, t)
    sign = angle.initial_sign(inv.point[1])
    theta = sign * angle.beta
    u = float(rho) * angle.unit_vector(sign)
    return SolutionSample(t=t, x=x, rho=rho, sign=sign, theta=theta, u=u,
                          flags=inv.flags)


class StripeEvaluator:
    """u_n(t, .) on a fixed box, evaluated through the exact flow.

    Carries the metadata that the midpoint quadrature uses to certify
    exactness: behind all combs the sample pattern is constant in x1 and
    alternates in x2 with pitch 2**-(n+1).
    """

    def __init__(self, n: int, angle: AngularData, t, box: Rect,
                 velocity_fn=None, field: DensityField | None = None):
        self.n = n
        self.angle = angle
        self.t = as_rational(t)
        self.box = box
        self.velocity_fn = velocity_fn or counterexample_flux().eval_f
        self.field = field if field is not None else field_for_box(n, box)
        # behind the combs the sign alternates with digit n+1 of x2:
        # period 2**-n, single-sign bands of height 2**-(n+1)
        self.stripe_pitch = half_pow(n)
        self.stripe_height = half_pow(n + 1)
        self.x1_invariant = True

    def sample(self, x: Point2) -> SolutionSample:
        return evaluate_u(self.field, self.angle, self.velocity_fn, self.t, x)

    def __call__(self, x: Point2) -> np.ndarray:
        return self.sample(x).u


def _midpoints(lo, hi, m: int):
    w = (hi - lo) / m
    return [lo + w * i + w / 2 for i in range(m)], w


def angle_pattern(evaluator: StripeEvaluator, grid_m) -> np.ndarray:
    """Matrix of angle signs on the midpoint grid (rows indexed by x2)."""
    gx, gy = (grid_m, grid_m) if isinstance(grid_m, int) else grid_m
    xs, _ = _midpoints(evaluator.box.lo[0], evaluator.box.hi[0], gx)
    ys, _ = _midpoints(evaluator.box.lo[1], evaluator.box.hi[1], gy)
    out = np.empty((gy, gx), dtype=np.int8)
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            out[j, i] = evaluator.sample(Point2(x, y)).sign
    return out


@dataclass
class L1Result:
    value: float
    cell_area: Fraction
    exact: bool

    def __float__(self):
        return self.value


def _rows_aligned(box: Rect, gy: int, pitch: Fraction) -> bool:
    """Rows are exact iff each cell row sits inside one half-pitch stripe:
    the row height divides pitch/2 and the box bottom is on the stripe grid."""
    h = (box.hi[1] - box.lo[1]) / gy
    half = pitch / 2
    return (half / h).denominator == 1 and (box.lo[1] / half).denominator == 1


def l1_distance(eval_a, eval_b, box: Rect, grid_m) -> L1Result:
    """Midpoint quadrature of the pointwise Euclidean distance between two
    plane fields over the box.  If both evaluators declare x1-invariance and
    stripe pitches that align with the row grid, the integrand is constant on
    every cell and the quadrature is exact."""
    gx, gy = (grid_m, grid_m) if isinstance(grid_m, int) else grid_m
    xs, w = _midpoints(box.lo[0], box.hi[0], gx)
    ys, h = _midpoints(box.lo[1], box.hi[1], gy)
    cell = w * h
    total = 0.0
    for y in ys:
        for x in xs:
            p = Point2(x, y)
            d = np.asarray(eval_a(p), dtype=float) - np.asarray(eval_b(p), dtype=float)
            total += math.hypot(d[0], d[1])
    exact = all(
        getattr(e, "x1_invariant", False)
        and getattr(e, "stripe_pitch", None) is not None
        and _rows_aligned(box, gy, e.stripe_pitch)
        for e in (eval_a, eval_b))
    return L1Result(value=total * float(cell), cell_area=cell, exact=exact)


def initial_data_distance(n: int, m: int, box: Rect, field_m: DensityField | None = None) -> Fraction:
    """Exact L1 distance of the depth-n and depth-m initial data over the
    box.  The patterns share the angle factor, so the integrand is
    |rho_n - rho_m| at time 0: value 1 on the comb supports of levels
    n+1..m inside the box, 0 elsewhere."""
    if m < n:
        n, m = m, n
    if n == m:
        return Fraction(0)
    fld = field_m if field_m is not None else field_for_box(m, box)
    per_level = 3  # patches per level in construction order
    total = Fraction(0)
    for k in range(n + 1, m + 1):
        for patch in fld.patches[per_level * k: per_level * (k + 1)]:
            for r in patch.support0:
                cut = intersect_rect_box(r, box)
                if cut is not None:
                    total += cut.area()
    return total


def initial_data_bound_constant(box: Rect) -> Fraction:
    """A priori constant C with distance(n, m) <= C 2**-n: per level k the
    three families tile at most (3/2 + 3/2 + 3/4) 2**-k per unit length of
    diagonal extent of the box."""
    width = (box.hi[0] - box.lo[0]) + (box.hi[1] - box.lo[1])
    density = Fraction(3, 2) + Fraction(3, 2) + Fraction(3, 4)
    return density * width


@dataclass
class CellAverage:
    cell: Rect
    average: np.ndarray


def weak_limit_estimate(evaluator: StripeEvaluator, cell, cols_per_cell: int = 4):
    """Cell averages of the oscillating field over the evaluator's box.

    Rows per cell resolve the stripe pattern exactly (two per pitch, aligned),
    columns are few because the pattern is x1-invariant behind the combs.
    """
    cell = as_rational(cell)
    box = evaluator.box
    nx = int((box.hi[0] - box.lo[0]) / cell)
    ny = int((box.hi[1] - box.lo[1]) / cell)
    if nx < 1 or ny < 1:
        raise IllposedError("cell larger than the box")
    rows = int(cell / evaluator.stripe_height)
    if rows < 2:
        raise IllposedError("cell does not span a full stripe pair")
    out = []
    for j in range(ny):
        for i in range(nx):
            lo = Point2(box.lo[0] + cell * i, box.lo[1] + cell * j)
            sub = Rect(lo, Point2(lo[0] + cell, lo[1] + cell))
            xs, _ = _midpoints(sub.lo[0], sub.hi[0], cols_per_cell)
            ys, _ = _midpoints(sub.lo[1], sub.hi[1], rows)
            acc = np.zeros(2)
            for y in ys:
                for x in xs:
                    acc += evaluator(Point2(x, y))
            out.append(CellAverage(cell=sub, average=acc / (len(xs) * len(ys))))
    return out


def weak_limit_target(angle: AngularData) -> np.ndarray:
    """The stripe average: opposite angles cancel the sine component."""
    return np.array([3.0 * float(angle.cos_beta), 0.0])


@dataclass
class ResidualResult:
    defect: Fraction
    is_weak_solution: bool
    note: str
    bump_checks: list

    def to_dict(self):
        return {
            "defect": str(self.defect),
            "is_weak_solution": self.is_weak_solution,
            "note": self.note,
            "bump_checks": self.bump_checks,
        }


def weak_residual(angle: AngularData, flux=None, test_bumps: int = 0,
                  x2_interval=(0, 1), strip_halfwidth=Fraction(1, 8)) -> ResidualResult:
    """Conservation defect of the candidate averaged limit across the moving
    diagonal front.

    Behind the front the state is (3 cos beta, 0); ahead, the oscillation
    averages to the same vector while its flux averages to F(3) = 0 exactly
    (the magnitude is 3 there).  The state jump across the front therefore
    vanishes and the whole defect is the flux jump, whose size per unit of
    x2-extent is |F1 + F2| at rho = 3 cos beta.  Exact when cos beta is
    rational."""
    if flux is None:
        flux = counterexample_flux()
    if not isinstance(angle.cos_beta, Fraction):
        raise IllposedError("threshold decision needs an exact cos(beta)")
    rho_star = 3 * angle.cos_beta
    F = flux.eval_F(rho_star)
    defect = abs(F[0] + F[1])
    weak = defect == 0
    note = ("weak limit is a weak solution; a linearly degenerate family "
            "dissipates the angular oscillation" if weak else
            "weak limit fails the balance across the front")
    bumps = []
    if test_bumps > 0:
        bumps = _bump_balance_checks(angle, flux, test_bumps, x2_interval,
                                     strip_halfwidth)
    return ResidualResult(defect=defect, is_weak_solution=weak, note=note,
                          bump_checks=bumps)


def _bump_balance_checks(angle, flux, count, x2_interval, strip_halfwidth):
    """Float cross-check of the front balance: assemble d/dt of the slab
    integral plus all boundary contributions by quadrature, weighted by
    smooth bumps in x2, and compare against defect * integral(bump).

    The slab at time t is {x2 in [a,b], |x1 + x2 - t| < delta}.  States and
    averaged fluxes: behind the front u- = (3 cos beta, 0) with flux columns
    F(rho*) u-/rho*; ahead the averaged state equals u- while the averaged
    flux vanishes (the magnitude is 3 pointwise and F(3) = 0).
    """
    a, b = float(x2_interval[0]), float(x2_interval[1])
    delta = float(strip_halfwidth)
    rho_star = 3 * angle.cos_beta
    F = flux.eval_F(rho_star)
    u_minus = np.array([float(rho_star), 0.0])
    # scalar flux factors c(nu) = F(rho*) . nu / rho*, so G(u-) . nu = c * u-
    f_vec = np.array([float(F[0]) / float(rho_star), float(F[1]) / float(rho_star)])
    sqrt2 = math.sqrt(2.0)
    checks = []
    m = 512
    xs = np.linspace(a, b, m, endpoint=False) + (b - a) / (2 * m)
    dx2 = (b - a) / m
    for bi in range(count):
        c = a + (b - a) * (bi + 1) / (count + 1)
        w = (b - a) / 3
        s = np.clip((xs - c) / w, -1.0, 1.0)
        phi = (1 - s * s) ** 2
        int_phi = float(np.sum(phi) * dx2)
        # slab integral of u phi is t-independent (same mean state both sides)
        d_dt = 0.0
        # behind side: nu = -(1,1)/sqrt(2), boundary velocity e1, V.nu = -1/sqrt(2)
        nu_behind = -1.0 / sqrt2
        c_behind = float(f_vec[0] + f_vec[1]) * nu_behind
        behind = (c_behind * u_minus - u_minus * (-1.0 / sqrt2))
        # ahead side: nu = +(1,1)/sqrt(2), averaged flux 0, V.nu = +1/sqrt(2)
        ahead = (0.0 * u_minus - u_minus * (1.0 / sqrt2))
        # ds along a diagonal side = sqrt(2) dx2; top/bottom carry no e2-flux
        boundary = (behind + ahead) * sqrt2 * int_phi
        residual = d_dt + boundary
        got = float(np.linalg.norm(residual))
        expected = float(abs(F[0] + F[1])) * int_phi
        checks.append({"bump": bi, "residual": got, "expected": expected,
                       "abs_error": abs(got - expected), "halfwidth": delta})
    return checks
