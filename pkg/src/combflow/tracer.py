"""Exact event-driven integration of dx/dt = f(rho(t, x)) through a moving
piecewise-constant density field.

Between events the velocity is constant, so trajectories are exact rational
polylines.  The next event is the minimum over all patch rectangles of the
entry/exit time of the straight-line relative motion, each solved as a linear
equation.  No floating point is used anywhere in this module.

Membership at an event time t is decided at t+ (right limit): a point exactly
on an edge belongs to the moving rectangle iff the relative velocity keeps it
inside for small positive times, with the half-open convention breaking the
zero-relative-velocity ties (lo edge in, hi edge out).  This makes every
transversal crossing deterministic; genuinely tangential contacts are flagged
or raise, never silently resolved.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Optional

from .exactnum import Rational, as_rational
from .field import DensityField
from .geometry import Point2

DEFAULT_MAX_EVENTS = 10 ** 6

FLAG_BOUNDARY_START = "boundary_start"
FLAG_BOUNDARY_TOUCH = "boundary_touch"


class TraceError(RuntimeError):
    pass


class ChatteringError(TraceError):
    """Event count exceeded max_events; the scenario is malformed (the comb
    scenarios only produce finitely many transversal crossings)."""


class NoStabilizationError(TraceError):
    pass


class TangentialCrossingError(TraceError):
    pass


@dataclass(frozen=True)
class Breakpoint:
    t: Rational
    x: Point2
    v: tuple

    def csv_row(self):
        return (self.t, self.x[0], self.x[1], self.v[0], self.v[1])


class Trajectory:
    """Polyline (t_i, x_i, v_i): position is x_i + (t - t_i) v_i on
    [t_i, t_{i+1}]; velocities are right-continuous at events."""

    def __init__(self, points, flags=frozenset()):
        self.points = list(points)
        self.flags = frozenset(flags)

    @property
    def start(self) -> Point2:
        return self.points[0].x

    @property
    def end(self) -> Point2:
        return self.points[-1].x

    @property
    def end_time(self) -> Rational:
        return self.points[-1].t

    def position(self, t) -> Point2:
        t = as_rational(t)
        if t < self.points[0].t:
            raise TraceError(f"time {t} before trajectory start")
        if t > self.points[-1].t:
            last = self.points[-1]
            if last.v == (0, 0):
                return last.x
            raise TraceError(f"time {t} beyond traced interval")
        lo, hi = 0, len(self.points) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.points[mid].t <= t:
                lo = mid
            else:
                hi = mid - 1
        b = self.points[lo]
        dt = t - b.t
        return Point2(b.x[0] + dt * b.v[0], b.x[1] + dt * b.v[1])

    def segments(self):
        """(t0, t1, x0, v) for each constant-velocity piece."""
        out = []
        for a, b in zip(self.points, self.points[1:]):
            out.append((a.t, b.t, a.x, a.v))
        return out


@dataclass(frozen=True)
class ShiftResult:
    shift: tuple
    stabilization_time: Rational
    flags: frozenset


@dataclass(frozen=True)
class InverseResult:
    point: Point2
    flags: frozenset


class _CPatch:
    """Tracer-internal patch: plain tuples plus an optional sorted-interval
    index on an axis along which the rectangles are pairwise disjoint."""

    __slots__ = ("value", "w", "sum_rate", "strip", "rects",
                 "axis", "alos", "ahis", "aorder")

    def __init__(self, patch):
        self.value = patch.value
        self.w = patch.velocity
        self.sum_rate = patch.sum_rate
        self.strip = patch.support0.sum_range()
        self.rects = [(r.lo[0], r.lo[1], r.hi[0], r.hi[1])
                      for r in patch.support0]
        self.axis = None
        for axis in (0, 1):
            ivs = sorted((rc[axis], rc[axis + 2], i)
                         for i, rc in enumerate(self.rects))
            if all(a[1] <= b[0] for a, b in zip(ivs, ivs[1:])):
                self.axis = axis
                self.alos = [iv[0] for iv in ivs]
                self.ahis = [iv[1] for iv in ivs]
                self.aorder = [iv[2] for iv in ivs]
                break

    def candidates(self, a_lo, a_hi):
        """Rect indices whose index-axis interval meets [a_lo, a_hi] (closed);
        all rects when no axis index exists or the range is unbounded."""
        if self.axis is None or a_lo is None or a_hi is None:
            return range(len(self.rects))
        lo = bisect_left(self.ahis, a_lo)
        hi = bisect_right(self.alos, a_hi)
        return [self.aorder[i] for i in range(lo, hi)]


def _rect_window(rc, w, t, p, v):
    """Dwell interval (a, b) of segment-local times tau with
    p + v tau inside the rect translated by (t + tau) w.
    None bounds mean unbounded; returns None if empty."""
    a = b = None
    for axis in (0, 1):
        r0 = p[axis] - rc[axis] - w[axis] * t
        size = rc[axis + 2] - rc[axis]
        d = v[axis] - w[axis]
        if d == 0:
            if not (0 <= r0 < size):
                return None
            continue
        t1 = -r0 / d
        t2 = (size - r0) / d
        if t1 > t2:
            t1, t2 = t2, t1
        if a is None or t1 > a:
            a = t1
        if b is None or t2 < b:
            b = t2
    if a is not None and b is not None and a > b:
        return None
    return (a, b)


def _member_tplus(rc, w, t, p, v):
    """Half-open membership of p in the moving rect at time t+, judged with
    reference velocity v.  Also reports (member, on_edge, tangential)."""
    on_edge = False
    tangential = False
    for axis in (0, 1):
        r0 = p[axis] - rc[axis] - w[axis] * t
        size = rc[axis + 2] - rc[axis]
        if r0 < 0 or r0 > size:
            return (False, False, False)
        d = v[axis] - w[axis]
        if r0 == 0:
            on_edge = True
            if d < 0:
                return (False, True, False)
            if d == 0:
                tangential = True
        elif r0 == size:
            on_edge = True
            if d >= 0:
                return (False, True, d == 0)
            # d < 0 pulls inside
    return (True, on_edge, tangential)


def _linear_window(c0, rate, lo, hi):
    """Closed tau-interval where c0 + rate*tau lies in [lo, hi];
    (None, None) = all tau, None = empty."""
    if rate == 0:
        return (None, None) if lo <= c0 <= hi else None
    t1 = (lo - c0) / rate
    t2 = (hi - c0) / rate
    return (t1, t2) if t1 <= t2 else (t2, t1)


class _Tracer:
    def __init__(self, field: DensityField, velocity_fn):
        field.ensure_valid()
        self.field = field
        self.patches = [_CPatch(p) for p in field.patches]
        self._fn = velocity_fn
        self._vmemo = {}
        self.v_bg = self.velocity(field.background)

    def velocity(self, value):
        v = self._vmemo.get(value)
        if v is None:
            raw = self._fn(value)
            v = (as_rational(raw[0]), as_rational(raw[1]))
            self._vmemo[value] = v
        return v

    def resolve(self, t, p, v_ref, flags):
        """Containing (patch_idx, rect_idx) at time t+ (or None), plus
        whether the point sits on the closure edge of the returned rect.
        Tangential contacts (zero relative normal velocity on an edge) are
        flagged as boundary touches."""
        psum = p[0] + p[1]
        for pi, cp in enumerate(self.patches):
            if cp.strip is not None:
                rel = psum - cp.sum_rate * t
                if rel < cp.strip[0] or rel > cp.strip[1]:
                    continue
            a = 0 if cp.axis is None else cp.axis
            ra = p[a] - cp.w[a] * t
            for ri in cp.candidates(ra, ra):
                member, on_edge, tang = _member_tplus(cp.rects[ri], cp.w, t, p, v_ref)
                if tang:
                    flags.add(FLAG_BOUNDARY_TOUCH)
                if member:
                    return (pi, ri), on_edge
        return None, False

    def next_entry(self, t, p, v, cap, flags):
        """Earliest strictly positive entry time into any patch, bounded by
        cap when given; returns (tau, patch_idx, rect_idx) or None."""
        best = cap
        hit = None
        psum = p[0] + p[1]
        vsum = v[0] + v[1]
        for pi, cp in enumerate(self.patches):
            # strip prune: the patch stays inside its moving diagonal strip
            sw = (None, None)
            if cp.strip is not None:
                sw = _linear_window(psum - cp.sum_rate * t, vsum - cp.sum_rate,
                                    cp.strip[0], cp.strip[1])
                if sw is None:
                    continue
                if sw[1] is not None and sw[1] <= 0:
                    continue
                if best is not None and sw[0] is not None and sw[0] >= best:
                    continue
            # candidate rects from the swept index-axis range
            if cp.axis is not None:
                a = cp.axis
                ra0 = p[a] - cp.w[a] * t
                d = v[a] - cp.w[a]
                lo = 0 if sw[0] is None or sw[0] < 0 else sw[0]
                hi = sw[1]
                if best is not None and (hi is None or best < hi):
                    hi = best
                if d == 0:
                    rng = (ra0, ra0)
                elif hi is None:
                    rng = (None, None)  # unbounded sweep: scan all
                else:
                    e0, e1 = ra0 + d * lo, ra0 + d * hi
                    rng = (min(e0, e1), max(e0, e1))
                cands = cp.candidates(rng[0], rng[1])
            else:
                cands = cp.candidates(None, None)
            for ri in cands:
                win = _rect_window(cp.rects[ri], cp.w, t, p, v)
                if win is None:
                    continue
                a, b = win
                if a is None or a <= 0:
                    continue  # already resolved not-inside at t+
                if best is not None and a >= best:
                    continue
                if a == b:
                    flags.add(FLAG_BOUNDARY_TOUCH)  # corner graze, no dwell
                    continue
                best = a
                hit = (a, pi, ri)
        return hit

    def exit_time(self, region, t, p, v):
        """Upper end of the dwell window of the containing rect (None if the
        point never leaves, e.g. co-moving with the patch)."""
        pi, ri = region
        cp = self.patches[pi]
        win = _rect_window(cp.rects[ri], cp.w, t, p, v)
        if win is None:
            raise TraceError("inconsistent region: containing rect has no dwell")
        return win[1]

    def run(self, y, t_start, t_end, max_events):
        t = as_rational(t_start)
        p = (as_rational(y[0]), as_rational(y[1]))
        flags = set()
        region, on_edge = self.resolve(t, p, self.v_bg, flags)
        if on_edge:
            flags.add(FLAG_BOUNDARY_START)
        points = []
        events = 0
        while True:
            v = self.velocity(self.patches[region[0]].value) if region else self.v_bg
            # the region must be a fixed point of its own dynamics: re-resolving
            # with the velocity it implies must give the same region, otherwise
            # the crossing is tangential/sliding and no classical trajectory exists
            check, _ = self.resolve(t, p, v, flags)
            if check != region:
                raise TangentialCrossingError(
                    f"inconsistent region at t={t}, x={p}: crossing is not transversal")
            points.append(Breakpoint(t, Point2(p[0], p[1]), v))
            cap = None if t_end is None else t_end - t
            if region is not None:
                tau = self.exit_time(region, t, p, v)
            else:
                hit = self.next_entry(t, p, v, cap, flags)
                tau = hit[0] if hit else None
            if tau is None or (cap is not None and tau >= cap):
                if t_end is None:
                    if tau is None and v == (0, 0) and region is None:
                        return Trajectory(points, flags)
                    raise NoStabilizationError(
                        "trajectory never stabilizes (drift or endless dwell)")
                if cap > 0:
                    points.append(Breakpoint(
                        t_end, Point2(p[0] + v[0] * cap, p[1] + v[1] * cap), v))
                return Trajectory(points, flags)
            t = t + tau
            p = (p[0] + v[0] * tau, p[1] + v[1] * tau)
            region, _ = self.resolve(t, p, v, flags)
            events += 1
            if events > max_events:
                raise ChatteringError(f"more than {max_events} events; "
                                      "malformed scenario (chattering guard)")


def trace(field: DensityField, velocity_fn: Callable, y, t_end, *,
          t_start=0, max_events: int = DEFAULT_MAX_EVENTS) -> Trajectory:
    """Exact trajectory of dx/dt = velocity_fn(rho(t, x)) from y on
    [t_start, t_end]."""
    t_end = as_rational(t_end)
    field._check_time(t_start)
    field._check_time(t_end)
    return _Tracer(field, velocity_fn).run(y, t_start, t_end, max_events)


def trace_until_stable(field: DensityField, velocity_fn: Callable, y, *,
                       t_start=0, max_events: int = DEFAULT_MAX_EVENTS) -> Trajectory:
    """Trace until the velocity is permanently zero; requires an unbounded
    horizon and patches that all move (so they eventually pass any point)."""
    if field.horizon[1] is not None:
        raise TraceError("stabilization tracing needs an unbounded horizon")
    for p in field.patches:
        if p.velocity[0] == 0 and p.velocity[1] == 0:
            raise NoStabilizationError("static patch: no eventual stabilization")
    return _Tracer(field, velocity_fn).run(y, t_start, None, max_events)


def eventual_shift(field: DensityField, velocity_fn: Callable, y, *,
                   max_events: int = DEFAULT_MAX_EVENTS) -> ShiftResult:
    """Total displacement after all moving patches have passed, and the first
    time after which the point never moves again."""
    traj = trace_until_stable(field, velocity_fn, y, max_events=max_events)
    end = traj.end
    return ShiftResult(
        shift=(end[0] - as_rational(y[0]), end[1] - as_rational(y[1])),
        stabilization_time=traj.end_time,
        flags=traj.flags,
    )


def inverse_flow(field: DensityField, velocity_fn: Callable, x, t, *,
                 max_events: int = DEFAULT_MAX_EVENTS) -> InverseResult:
    """The point y with flow_t(y) = x, obtained by tracing the time-reversed
    field (supports at their time-t positions, velocities negated) back over
    a duration t.  Boundary contacts along the way are flagged."""
    t = as_rational(t)
    field._check_time(t)
    rev = field.reversed_from(t)

    def neg(value):
        v = velocity_fn(value)
        return (-as_rational(v[0]), -as_rational(v[1]))

    traj = _Tracer(rev, neg).run(x, 0, t, max_events)
    return InverseResult(point=traj.end, flags=traj.flags)
