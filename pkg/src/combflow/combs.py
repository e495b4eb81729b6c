"""Comb constructors: arrays of translating teeth that implement
digit-conditional shifts, and the per-level composed map with its pure
digit-arithmetic oracle.

Three kinds of comb exist at every dyadic level k (u = 2**-k):

  kind "up":       value-4 teeth of size u x 3u moving with e2, one tooth per
                   column where digit k of x1 is 0; a resting point in such a
                   column is carried up by exactly u (tooth height / 3), all
                   other points are untouched.
  kind "left":     value-2 teeth of size 3u x u moving with +e1, one tooth per
                   x2-band where digits k and k+1 of x2 differ (the band
                   x2 mod 2u in [u/2, 3u/2)); a point in such a band is pushed
                   left by exactly u (tooth width / 3).
  kind "up_half":  value-4 teeth of size u x 3u/2 moving with e2 in the same
                   columns as "up"; carries by u/2.

The teeth of level k live inside disjoint diagonal strips of corner sums
u*[28,32], u*[22,27] and u*[16,21] respectively; all strips translate at unit
diagonal rate, so the three families (and all levels) never meet, and a
resting point is passed first by "up", then "left", then "up_half".

The net effect of one level passing is, in binary digits: flip digit k of x2
if digit k of x1 is 0; then flip digit k of x1 if digits k, k+1 of the new x2
differ; then flip digit k+1 of x2 if digit k of the new x1 is 0.  Composing
the three shifts sends the set {digit k of x2 = 0} onto {digit k+1 of x2 = 0}
up to measure zero, which is what `verify_level` samples.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .exactnum import Rational, as_rational, digit, half_pow, ifloor, is_dyadic
from .field import DensityField, MovingPatch
from .geometry import DiagonalStrip, Point2, Rect, RectUnion, union_in_strip
from .tracer import trace_until_stable

KIND_UP = "up"
KIND_LEFT = "left"
KIND_UP_HALF = "up_half"

# (value, velocity, strip sum bounds in units of 2**-k)
_KIND_TABLE = {
    KIND_UP: (4, (0, 1), (28, 32)),
    KIND_LEFT: (2, (1, 0), (22, 27)),
    KIND_UP_HALF: (4, (0, 1), (16, 21)),
}


class CombError(ValueError):
    pass


@dataclass(frozen=True)
class CombSpec:
    """Finite truncation of a level-k comb: tooth_count teeth starting at
    tooth index start_index (tooth j sits at digit-axis offset j * 2**(1-k)),
    shifted transversally by strip_offset inside the slack of its strip."""

    k: int
    kind: str
    tooth_count: int
    start_index: int = 0
    strip_offset: Rational = Fraction(0)

    def __post_init__(self):
        if self.kind not in _KIND_TABLE:
            raise CombError(f"unknown comb kind {self.kind!r}")
        if self.tooth_count < 1:
            raise CombError("tooth_count must be >= 1")

    @property
    def unit(self) -> Fraction:
        return half_pow(self.k)

    @property
    def period(self) -> Fraction:
        return 2 * self.unit

    def strip(self) -> DiagonalStrip:
        lo, hi = _KIND_TABLE[self.kind][2]
        return DiagonalStrip(lo * self.unit, hi * self.unit)

    def offset_slack(self) -> Fraction:
        u = self.unit
        if self.kind == KIND_UP:
            return 0 * u          # tooth diagonal extent fills the strip
        if self.kind == KIND_LEFT:
            return u              # strip width 5u, tooth extent 4u
        return Fraction(5, 2) * u  # strip width 5u, tooth extent 5u/2


def build_comb(spec: CombSpec) -> MovingPatch:
    """Teeth of one comb as a single moving patch.  Raises if the placement
    leaves the prescribed strip."""
    off = as_rational(spec.strip_offset)
    if off < 0 or off > spec.offset_slack():
        raise CombError(
            f"strip_offset {off} outside slack [0, {spec.offset_slack()}] "
            f"for kind {spec.kind!r} at level {spec.k}")
    u = spec.unit
    value, velocity, _ = _KIND_TABLE[spec.kind]
    rects = []
    for j in range(spec.start_index, spec.start_index + spec.tooth_count):
        anchor = j * spec.period
        if spec.kind == KIND_UP:
            lo2 = 28 * u - anchor + off
            rects.append(Rect(Point2(anchor, lo2), Point2(anchor + u, lo2 + 3 * u)))
        elif spec.kind == KIND_LEFT:
            band_lo = anchor + u / 2
            lo1 = 22 * u - band_lo + off
            rects.append(Rect(Point2(lo1, band_lo), Point2(lo1 + 3 * u, band_lo + u)))
        else:
            lo2 = 16 * u - anchor + off
            rects.append(Rect(Point2(anchor, lo2),
                              Point2(anchor + u, lo2 + Fraction(3, 2) * u)))
    patch = MovingPatch(as_rational(value),
                        (as_rational(velocity[0]), as_rational(velocity[1])),
                        RectUnion(rects))
    if not union_in_strip(patch.support0, spec.strip()):
        raise CombError(f"comb {spec} leaves its strip")
    return patch


def comb_covering(k: int, kind: str, lo, hi, strip_offset=Fraction(0)) -> CombSpec:
    """Spec whose teeth cover every digit-axis position in [lo, hi)
    (x1 for the upward kinds, x2 for the left kind), with one spare tooth of
    margin on each side."""
    lo, hi = as_rational(lo), as_rational(hi)
    if not lo < hi:
        raise CombError("empty cover interval")
    period = 2 * half_pow(k)
    ref = half_pow(k) / 2 if kind == KIND_LEFT else Fraction(0)
    first = ifloor((lo - ref) / period) - 1
    last = ifloor((hi - ref) / period) + 1
    return CombSpec(k=k, kind=kind, tooth_count=last - first + 1,
                    start_index=first, strip_offset=strip_offset)


def unit_up_comb(j_lo: int, j_hi: int) -> MovingPatch:
    """Unit-scale upward comb: teeth [j, j+1) x [j, j+3) for even j in
    [j_lo, j_hi); carries points above it up by 1 exactly when floor(x1)
    is even."""
    rects = [Rect(Point2(Fraction(j), Fraction(j)), Point2(Fraction(j + 1), Fraction(j + 3)))
             for j in range(j_lo, j_hi) if j % 2 == 0]
    if not rects:
        raise CombError("empty unit comb range")
    return MovingPatch(Fraction(4), (Fraction(0), Fraction(1)), RectUnion(rects))


def unit_left_comb(j_lo: int, j_hi: int) -> MovingPatch:
    """Unit-scale leftward comb: teeth [j, j+3) x [j, j+1) for even j; pushes
    points left by 1 exactly when floor(x2) is even."""
    rects = [Rect(Point2(Fraction(j), Fraction(j)), Point2(Fraction(j + 3), Fraction(j + 1)))
             for j in range(j_lo, j_hi) if j % 2 == 0]
    if not rects:
        raise CombError("empty unit comb range")
    return MovingPatch(Fraction(2), (Fraction(1), Fraction(0)), RectUnion(rects))


@dataclass(frozen=True)
class CombLevel:
    """The three level-k combs in one validated field (background 3)."""

    k: int
    up: MovingPatch
    left: MovingPatch
    up_half: MovingPatch
    field: DensityField

    @classmethod
    def build(cls, k: int, x1_cover, x2_cover, offsets=(0, 0, 0)) -> "CombLevel":
        """Covers: x1 interval reached by the upward combs (including the
        positions points take after the left shift), x2 interval for the
        left comb (including positions after the first up shift)."""
        u = half_pow(k)
        lo1, hi1 = as_rational(x1_cover[0]), as_rational(x1_cover[1])
        lo2, hi2 = as_rational(x2_cover[0]), as_rational(x2_cover[1])
        up = build_comb(comb_covering(k, KIND_UP, lo1, hi1, offsets[0]))
        left = build_comb(comb_covering(k, KIND_LEFT, lo2 - u, hi2 + u, offsets[1]))
        up_half = build_comb(comb_covering(k, KIND_UP_HALF, lo1 - u, hi1, offsets[2]))
        fld = DensityField(3, [up, left, up_half])
        rep = fld.validate_disjoint()
        if not rep.ok:
            raise CombError(f"level {k} comb families overlap: {rep.violations}")
        return cls(k=k, up=up, left=left, up_half=up_half, field=fld)

    def patches(self):
        return [self.up, self.left, self.up_half]


def level_image(level: CombLevel, velocity_fn, p: Point2) -> Point2:
    """Where the passage of one full comb level eventually puts p (traced)."""
    traj = trace_until_stable(level.field, velocity_fn, p)
    return traj.end


def psi_digit_oracle(k: int, p: Point2) -> Point2:
    """Digit-arithmetic image of one level passing: no tracing involved.

    Applies, in order: x2 += 2**-k if digit k of x1 is 0; then x1 -= 2**-k if
    digits k and k+1 of the updated x2 differ; then x2 += 2**-(k+1) if digit k
    of the updated x1 is 0.
    """
    x1, x2 = as_rational(p[0]), as_rational(p[1])
    if x1 < 0 or x2 < 0:
        raise CombError("digit oracle needs the positive quadrant")
    if not (is_dyadic(x1) and is_dyadic(x2)):
        raise CombError("digit oracle needs dyadic coordinates")
    u = half_pow(k)
    if digit(x1, k) == 0:
        x2 += u
    if digit(x2, k) != digit(x2, k + 1):
        x1 -= u
        if x1 < 0:
            raise CombError("left shift left the positive quadrant")
    if digit(x1, k) == 0:
        x2 += u / 2
    return Point2(x1, x2)


@dataclass
class PsiReport:
    k: int
    samples: int
    trace_mismatches: list  # (point, traced, oracle)
    digit_mismatches: list  # (point, image)
    flagged: int

    @property
    def ok(self) -> bool:
        return not self.trace_mismatches and not self.digit_mismatches

    def to_dict(self):
        return {
            "k": self.k,
            "samples": self.samples,
            "ok": self.ok,
            "trace_mismatches": len(self.trace_mismatches),
            "digit_mismatches": len(self.digit_mismatches),
            "flagged": self.flagged,
        }


def sample_points(k: int, n: int, seed: int, base=(34, 34)):
    """n dyadic points in a window [base, base + 2**(1-k)) ** 2, strictly off
    every tooth edge: coordinates are odd multiples of 2**-(k+8), while all
    comb geometry (and every shift) lives on the 2**-(k+1) grid."""
    rng = random.Random(seed)
    res = half_pow(k + 8)
    span = 1 << 9  # window width in units of res
    b1, b2 = as_rational(base[0]), as_rational(base[1])
    pts = []
    for _ in range(n):
        o1 = rng.randrange(0, span // 2) * 2 + 1
        o2 = rng.randrange(0, span // 2) * 2 + 1
        pts.append(Point2(b1 + o1 * res, b2 + o2 * res))
    return pts


def verify_level(k: int, samples: int, velocity_fn, seed: int = 0,
                 base=(34, 34), level: CombLevel | None = None) -> PsiReport:
    """Sampled verification that the traced level map equals the digit oracle
    exactly and that it sends digit k of x2 to digit k+1 of the image."""
    b1, b2 = as_rational(base[0]), as_rational(base[1])
    period = 2 * half_pow(k)
    if level is None:
        u = half_pow(k)
        level = CombLevel.build(
            k,
            x1_cover=(b1 - period, b1 + period + u),
            x2_cover=(b2 - period, b2 + period + 2 * u),
        )
    pts = sample_points(k, samples, seed, base=(b1, b2))
    trace_bad, digit_bad = [], []
    flagged = 0
    for p in pts:
        traj = trace_until_stable(level.field, velocity_fn, p)
        if traj.flags:
            flagged += 1
        img = traj.end
        want = psi_digit_oracle(k, p)
        if img != want:
            trace_bad.append((p, img, want))
        if digit(img[1], k + 1) != digit(p[1], k):
            digit_bad.append((p, img))
    return PsiReport(k=k, samples=len(pts), trace_mismatches=trace_bad,
                     digit_mismatches=digit_bad, flagged=flagged)


def comb_rect_rows(patch: MovingPatch, label: str):
    """CSV rows (label, index, lo1, lo2, hi1, hi2) for geometry export."""
    return [(label, i, r.lo[0], r.lo[1], r.hi[0], r.hi[1])
            for i, r in enumerate(patch.support0)]
