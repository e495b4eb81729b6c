"""Points, half-open axis-aligned rectangles, disjoint rectangle unions,
diagonal strips, and exact area measure.

Every rectangle is half-open: lo <= p < hi componentwise.  That makes point
membership and disjoint tilings unambiguous and keeps all set predicates
exact decisions on rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .exactnum import Rational, as_rational


class Point2(NamedTuple):
    x1: Rational
    x2: Rational


def point(x1, x2) -> Point2:
    return Point2(as_rational(x1), as_rational(x2))


def translate(p: Point2, v, scale=1) -> Point2:
    s = as_rational(scale)
    return Point2(p[0] + s * v[0], p[1] + s * v[1])


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Rect:
    """Nonempty half-open box [lo.x1, hi.x1) x [lo.x2, hi.x2)."""

    lo: Point2
    hi: Point2

    def __post_init__(self):
        if not (self.lo[0] < self.hi[0] and self.lo[1] < self.hi[1]):
            raise GeometryError(f"degenerate rectangle {self.lo}..{self.hi}")

    def contains(self, p: Point2) -> bool:
        return (self.lo[0] <= p[0] < self.hi[0]
                and self.lo[1] <= p[1] < self.hi[1])

    def translated(self, v, scale=1) -> "Rect":
        return Rect(translate(self.lo, v, scale), translate(self.hi, v, scale))

    def area(self) -> Rational:
        return (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])

    def sum_range(self):
        """(min, max) of x1+x2 over the closed corners."""
        return (self.lo[0] + self.lo[1], self.hi[0] + self.hi[1])

    def overlaps(self, other: "Rect") -> bool:
        return (self.lo[0] < other.hi[0] and other.lo[0] < self.hi[0]
                and self.lo[1] < other.hi[1] and other.lo[1] < self.hi[1])


def rect(lo1, lo2, hi1, hi2) -> Rect:
    return Rect(point(lo1, lo2), point(hi1, hi2))


class RectUnion:
    """Finite union of pairwise disjoint half-open rectangles."""

    def __init__(self, rects: Iterable[Rect]):
        rs = tuple(rects)
        # sort by lo.x1 so the disjointness sweep can stop early per row
        order = sorted(range(len(rs)), key=lambda i: (rs[i].lo[0], rs[i].lo[1]))
        for a in range(len(order)):
            ra = rs[order[a]]
            for b in range(a + 1, len(order)):
                rb = rs[order[b]]
                if rb.lo[0] >= ra.hi[0]:
                    break
                if ra.overlaps(rb):
                    raise GeometryError(f"overlapping rectangles {ra} and {rb}")
        self.rects = rs

    def __len__(self):
        return len(self.rects)

    def __iter__(self):
        return iter(self.rects)

    def contains(self, p: Point2) -> bool:
        return any(r.contains(p) for r in self.rects)

    def measure(self) -> Rational:
        return sum((r.area() for r in self.rects), as_rational(0))

    def translated(self, v, scale=1) -> "RectUnion":
        out = RectUnion(())
        out.rects = tuple(r.translated(v, scale) for r in self.rects)
        return out

    def sum_range(self):
        """Smallest closed interval of corner sums covering every member."""
        if not self.rects:
            return None
        los, his = zip(*(r.sum_range() for r in self.rects))
        return (min(los), max(his))

    def bounding_box(self):
        if not self.rects:
            return None
        return Rect(
            Point2(min(r.lo[0] for r in self.rects), min(r.lo[1] for r in self.rects)),
            Point2(max(r.hi[0] for r in self.rects), max(r.hi[1] for r in self.rects)),
        )


@dataclass(frozen=True)
class DiagonalStrip:
    """Set of points with lo_sum <= x1 + x2 < hi_sum."""

    lo_sum: Rational
    hi_sum: Rational

    def __post_init__(self):
        if not self.lo_sum < self.hi_sum:
            raise GeometryError(f"empty strip [{self.lo_sum}, {self.hi_sum})")

    def contains(self, p: Point2) -> bool:
        return self.lo_sum <= p[0] + p[1] < self.hi_sum


def union_in_strip(union: RectUnion, strip: DiagonalStrip) -> bool:
    """Exact containment of a half-open union in a half-open strip.

    For half-open boxes this is equivalent to all closed-corner sums lying
    in the closed interval [lo_sum, hi_sum]: the supremum corner itself is
    not a member point.
    """
    rng = union.sum_range()
    if rng is None:
        return True
    return rng[0] >= strip.lo_sum and rng[1] <= strip.hi_sum


def intersect_rect_box(r: Rect, box: Rect):
    """Intersection of two half-open rects, or None if empty."""
    lo1 = max(r.lo[0], box.lo[0])
    lo2 = max(r.lo[1], box.lo[1])
    hi1 = min(r.hi[0], box.hi[0])
    hi2 = min(r.hi[1], box.hi[1])
    if lo1 < hi1 and lo2 < hi2:
        return Rect(Point2(lo1, lo2), Point2(hi1, hi2))
    return None
