"""Time-dependent piecewise-constant density fields built from translating
rectangle-union patches, with exact disjointness and Rankine-Hugoniot checks.

A patch is a constant density value on a rigidly translating half-open
rectangle union; the field value off all patches is the background constant.
Patch supports must stay pairwise disjoint for every time in the horizon,
which is decided exactly (each pairwise overlap condition is a finite set of
linear inequalities in t).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Optional

from .exactnum import Rational, as_rational
from .geometry import Point2, Rect, RectUnion, translate


class FieldError(ValueError):
    pass


@dataclass(frozen=True)
class MovingPatch:
    """Density `value` on support0 translated by t * velocity."""

    value: Rational
    velocity: tuple
    support0: RectUnion

    def __post_init__(self):
        if not self.value > 0:
            raise FieldError(f"patch density must be positive, got {self.value}")

    @property
    def sum_rate(self) -> Rational:
        return self.velocity[0] + self.velocity[1]

    def support_at(self, t) -> RectUnion:
        return self.support0.translated(self.velocity, as_rational(t))

    def contains(self, t, p: Point2) -> bool:
        q = translate(p, self.velocity, -as_rational(t))
        return self.support0.contains(q)


def moving_patch(value, velocity, support) -> MovingPatch:
    vel = (as_rational(velocity[0]), as_rational(velocity[1]))
    if not isinstance(support, RectUnion):
        support = RectUnion(support)
    return MovingPatch(as_rational(value), vel, support)


@dataclass
class DisjointnessReport:
    ok: bool
    violations: list  # (patch_i, patch_j, witness_t)

    def to_dict(self):
        return {
            "ok": self.ok,
            "violations": [
                {"patch_a": i, "patch_b": j, "witness_t": str(t)}
                for i, j, t in self.violations
            ],
        }


@dataclass
class RHReport:
    ok: bool
    violations: list  # (patch_idx, rect_idx, axis, lhs, rhs)
    note: str = ("jumps are checked against the background value; patch "
                 "supports are validated disjoint with positive gaps, so no "
                 "edge borders another patch")

    def to_dict(self):
        return {
            "ok": self.ok,
            "note": self.note,
            "violations": [
                {"patch": p, "rect": r, "axis": a, "lhs": str(l), "rhs": str(rh)}
                for p, r, a, l, rh in self.violations
            ],
        }


def _interval_overlap_window(lo_a, hi_a, wa, lo_b, hi_b, wb):
    """Times t with [lo_a + wa t, hi_a + wa t) meeting [lo_b + wb t, hi_b + wb t).

    Returns (lo, hi) with None for unbounded ends, or None if never.
    Each condition is linear:  (wa - wb) t < hi_b - lo_a  and  (wb - wa) t <
    hi_a - lo_b.
    """
    lo, hi = None, None  # current window, None = unbounded

    for coef, bound in (((wa - wb), hi_b - lo_a), ((wb - wa), hi_a - lo_b)):
        if coef == 0:
            if not (0 < bound):
                return None
        elif coef > 0:
            b = bound / coef
            hi = b if hi is None else min(hi, b)
        else:
            b = bound / coef
            lo = b if lo is None else max(lo, b)
    if lo is not None and hi is not None and not (lo < hi):
        return None
    return (lo, hi)


def _pair_overlap_witness(pa: MovingPatch, pb: MovingPatch, t_lo, t_hi):
    """Exact: earliest t in [t_lo, t_hi] (t_hi may be None for +inf) at which
    some rect of pa intersects some rect of pb, else None."""
    best = None
    for ra in pa.support0:
        for rb in pb.support0:
            w1 = _interval_overlap_window(ra.lo[0], ra.hi[0], pa.velocity[0],
                                          rb.lo[0], rb.hi[0], pb.velocity[0])
            if w1 is None:
                continue
            w2 = _interval_overlap_window(ra.lo[1], ra.hi[1], pa.velocity[1],
                                          rb.lo[1], rb.hi[1], pb.velocity[1])
            if w2 is None:
                continue
            lo = max(x for x in (w1[0], w2[0], t_lo) if x is not None)
            his = [x for x in (w1[1], w2[1], t_hi) if x is not None]
            hi = min(his) if his else None
            if hi is None or lo < hi:
                # witness strictly inside the open part of the window
                wit = lo if (w1[0] is None and w2[0] is None) else (
                    lo + (Fraction(1, 2) * (hi - lo) if hi is not None else 1))
                if best is None or wit < best:
                    best = wit
    return best


class DensityField:
    """background value + disjoint translating patches, valid on a time
    horizon [t_lo, t_hi] (t_hi None = unbounded)."""

    def __init__(self, background, patches, horizon=(0, None)):
        self.background = as_rational(background)
        self.patches = tuple(patches)
        t_lo = as_rational(horizon[0])
        t_hi = None if horizon[1] is None else as_rational(horizon[1])
        if t_hi is not None and not t_lo < t_hi:
            raise FieldError("empty horizon")
        self.horizon = (t_lo, t_hi)
        self._disjoint_ok: Optional[bool] = None

    def _check_time(self, t):
        t = as_rational(t)
        lo, hi = self.horizon
        if t < lo or (hi is not None and t > hi):
            raise FieldError(f"time {t} outside horizon {self.horizon}")
        return t

    def value_bounds(self):
        vals = [self.background] + [p.value for p in self.patches]
        return (min(vals), max(vals))

    def eval_rho(self, t, x: Point2) -> Rational:
        t = self._check_time(t)
        for p in self.patches:
            if p.contains(t, x):
                return p.value
        return self.background

    def validate_disjoint(self) -> DisjointnessReport:
        t_lo, t_hi = self.horizon
        violations = []
        n = len(self.patches)
        for i in range(n):
            for j in range(i + 1, n):
                a, b = self.patches[i], self.patches[j]
                # exact shortcut: equal diagonal sum-rate and separated
                # corner-sum ranges translate in lockstep, so never meet
                if a.sum_rate == b.sum_rate:
                    ra, rb = a.support0.sum_range(), b.support0.sum_range()
                    if ra is None or rb is None:
                        continue
                    if ra[1] <= rb[0] or rb[1] <= ra[0]:
                        continue
                wit = _pair_overlap_witness(a, b, t_lo, t_hi)
                if wit is not None:
                    violations.append((i, j, wit))
        ok = not violations
        self._disjoint_ok = ok
        return DisjointnessReport(ok=ok, violations=violations)

    def ensure_valid(self):
        if self._disjoint_ok is None:
            self.validate_disjoint()
        if not self._disjoint_ok:
            raise FieldError("field patches overlap; see validate_disjoint()")

    def verify_rankine_hugoniot(self, flux) -> RHReport:
        """Check s [rho] = [F] . n on every patch edge, exactly.

        Edges are axis-aligned; the edge with normal e_alpha moves at speed
        velocity[alpha], and both parallel edges of a rect give the same
        condition.
        """
        self.ensure_valid()
        bg = self.background
        Fbg = flux.eval_F(bg)
        violations = []
        for pi, p in enumerate(self.patches):
            Fp = flux.eval_F(p.value)
            jump = p.value - bg
            for axis in (0, 1):
                lhs = p.velocity[axis] * jump
                rhs = Fp[axis] - Fbg[axis]
                if lhs != rhs:
                    for ri in range(len(p.support0)):
                        violations.append((pi, ri, axis, lhs, rhs))
        return RHReport(ok=not violations, violations=violations)

    def time_shifted(self, s) -> "DensityField":
        """Field tau -> rho(s + tau, .): patches translated by s * velocity."""
        s = as_rational(s)
        lo, hi = self.horizon
        out = DensityField(
            self.background,
            [MovingPatch(p.value, p.velocity, p.support0.translated(p.velocity, s))
             for p in self.patches],
            horizon=(lo - s, None if hi is None else hi - s),
        )
        out._disjoint_ok = self._disjoint_ok
        return out

    def reversed_from(self, t_final) -> "DensityField":
        """Field sigma -> rho(t_final - sigma, .) for backward tracing:
        supports moved to their t_final position, velocities negated."""
        t_final = as_rational(t_final)
        out = DensityField(
            self.background,
            [MovingPatch(p.value, (-p.velocity[0], -p.velocity[1]),
                         p.support0.translated(p.velocity, t_final))
             for p in self.patches],
            horizon=(0, t_final),
        )
        out._disjoint_ok = self._disjoint_ok
        return out

    def sample_grid(self, t, box: Rect, nx: int, ny: int):
        """Raster rows (x1, x2, rho) at cell midpoints; for CSV export."""
        rows = []
        w = (box.hi[0] - box.lo[0]) / nx
        h = (box.hi[1] - box.lo[1]) / ny
        for j in range(ny):
            x2 = box.lo[1] + h * j + h / 2
            for i in range(nx):
                x1 = box.lo[0] + w * i + w / 2
                rows.append((x1, x2, self.eval_rho(t, Point2(x1, x2))))
        return rows
