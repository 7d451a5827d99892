"""Exact arithmetic on powers of two with rational exponents.

Schedule tuning and the summability chain compare quantities of the form
m * 2^(p/q) where the exponents run far beyond anything a float (or even a
materialized big integer) can hold.  Comparisons here are exact: they reduce
to integer root extraction and bit-length reasoning, materializing a shifted
integer only when the two sides are genuinely close in magnitude (in which
case both fit in memory by construction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

# Refuse to materialize integers above this many bits (~32 MiB).
MAX_EXACT_BITS = 1 << 28


def pow2_floor(exponent: Fraction) -> int:
    """Exact floor(2^exponent) for a non-negative rational exponent."""
    e = Fraction(exponent)
    if e < 0:
        raise ValueError("exponent must be >= 0")
    p, q = e.numerator, e.denominator
    if p > MAX_EXACT_BITS:
        raise _capacity(p)
    if q == 1:
        return 1 << p
    root, _ = gmpy2.iroot(gmpy2.mpz(1) << p, q)
    return int(root)


def pow2_ceil(exponent: Fraction) -> int:
    """Exact ceil(2^exponent) for a non-negative rational exponent."""
    e = Fraction(exponent)
    p, q = e.numerator, e.denominator
    if q == 1:
        if p > MAX_EXACT_BITS:
            raise _capacity(p)
        return 1 << p
    # 2^(p/q) is irrational whenever q does not divide p, so floor + 1.
    return pow2_floor(e) + 1


def _capacity(bits: int) -> Exception:
    from .errors import CapacityError

    return CapacityError(
        f"exact value needs ~2^{bits.bit_length()} bits ({bits} > {MAX_EXACT_BITS})"
    )


def log2_int(n: int) -> float:
    """log2 of a positive integer of any size, good to ~1 ulp."""
    if n <= 0:
        raise ValueError("log2_int needs a positive integer")
    bl = n.bit_length()
    if bl <= 53:
        return math.log2(n)
    shift = bl - 53
    return math.log2(n >> shift) + shift


def log2_fraction(x: Fraction) -> float:
    """log2 of a positive rational of any size."""
    if x <= 0:
        raise ValueError("log2_fraction needs a positive value")
    return log2_int(x.numerator) - log2_int(x.denominator)


def int_le_shifted(a: int, b: int, d: int) -> bool:
    """Exact test a <= b * 2^d for positive integers a, b and any integer d.

    Never materializes the shift unless the two sides are within one bit of
    each other, in which case the shifted value has the same size as the
    larger operand.
    """
    if a <= 0 or b <= 0:
        raise ValueError("operands must be positive")
    if d < 0:
        return not int_le_shifted(b, a, -d) or a << -d == b
    gap = a.bit_length() - (b.bit_length() + d)
    if gap >= 1:
        return False  # a >= 2^(bl(a)-1) >= 2^(bl(b)+d) > b*2^d
    if gap <= -1:
        return True  # a < 2^(bl(a)) <= 2^(bl(b)+d-1) <= b*2^d
    return a <= b << d


@dataclass(frozen=True)
class Scaled:
    """Exact positive value mantissa * 2^exponent with rational exponent."""

    mantissa: int
    exponent: Fraction = Fraction(0)

    def __post_init__(self):
        if self.mantissa <= 0:
            raise ValueError("mantissa must be positive")
        object.__setattr__(self, "exponent", Fraction(self.exponent))

    def __mul__(self, other: "Scaled") -> "Scaled":
        return Scaled(self.mantissa * other.mantissa, self.exponent + other.exponent)

    def __le__(self, other: "Scaled") -> bool:
        diff = other.exponent - self.exponent
        q = diff.denominator
        d = diff.numerator  # diff = d / q
        return int_le_shifted(self.mantissa**q, other.mantissa**q, d)

    def __lt__(self, other: "Scaled") -> bool:
        return self <= other and not other <= self

    def log2(self) -> float:
        return log2_int(self.mantissa) + float(self.exponent)

    @staticmethod
    def pow2(exponent) -> "Scaled":
        return Scaled(1, Fraction(exponent))
