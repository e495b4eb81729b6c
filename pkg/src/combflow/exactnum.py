"""Exact rational arithmetic and dyadic digit extraction.

All geometry in this package runs on exact rationals; floats only appear in
the final trigonometric / quadrature layers.  ``Rational`` is the stdlib
``fractions.Fraction``: arbitrary precision, always reduced, denominator
positive, which is the canonical form the "p/q" serialization relies on.
"""

from __future__ import annotations

from fractions import Fraction

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rational(num, den=1) -> Fraction:
    return Fraction(num, den)


def as_rational(x) -> Fraction:
    """Coerce int / Fraction / 'p/q' string to Fraction.  Floats are rejected:
    decimal floats must never leak into exact fields."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"not an exact rational: {x!r} ({type(x).__name__})")


def ifloor(x) -> int:
    """Greatest integer <= x (true floor, not truncation)."""
    x = as_rational(x)
    return x.numerator // x.denominator


def half_pow(k: int) -> Fraction:
    """2**(-k) as an exact rational; k may be any integer."""
    if k >= 0:
        return Fraction(1, 1 << k)
    return Fraction(1 << (-k))


def digit(x, k: int) -> int:
    """Binary digit of weight 2**(-k) of x >= 0, i.e. floor(2**k * x) mod 2.

    Dyadic rationals use their terminating expansion (a tail ...0111... is
    never produced), so {digit(., k) == 0} is a half-open, measurable set,
    consistent with the package-wide half-open rectangle convention.
    """
    x = as_rational(x)
    if x < 0:
        raise ValueError(f"digit() is defined for x >= 0 only, got {x}")
    num, den = x.numerator, x.denominator
    if k >= 0:
        return ((num << k) // den) & 1
    return (num // (den << (-k))) & 1


def is_dyadic(x) -> bool:
    den = as_rational(x).denominator
    return den & (den - 1) == 0


def format_rational(x) -> str:
    x = as_rational(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))
