"""Exact algebra of dyadic cubes in [0,1]^d.

Cubes are indexed by (level n, integer coordinates k) and never touch
floating point: side lengths are 2^-n, endpoints are Fractions, and every
geometric predicate (membership, distance, intersection) is decided with
exact rational arithmetic.  Level-n cubes come in two closure flavours:
closed products of [k 2^-n, (k+1) 2^-n], and half-open products of
[k 2^-n, (k+1) 2^-n) which tile [0,1)^d without overlap.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    CoordOutOfRange,
    LevelCapExceeded,
    LevelMismatch,
    NoParent,
    UnsupportedDimension,
)

CLOSED = "closed"
HALF_OPEN = "half_open"

DEFAULT_LEVEL_CAP = 30
_LEVEL_CAP_ENV = "FRACTAL_HIT_LAB_LEVEL_CAP"


def level_cap() -> int:
    """Current dyadic level cap (env override FRACTAL_HIT_LAB_LEVEL_CAP)."""
    raw = os.environ.get(_LEVEL_CAP_ENV)
    if raw is None:
        return DEFAULT_LEVEL_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise LevelCapExceeded(f"bad {_LEVEL_CAP_ENV}={raw!r}") from exc
    if cap < 0:
        raise LevelCapExceeded(f"bad {_LEVEL_CAP_ENV}={raw!r}")
    return cap


def check_level(n: int, cap: int | None = None) -> None:
    limit = level_cap() if cap is None else cap
    if n > limit:
        raise LevelCapExceeded(f"level {n} exceeds cap {limit}")


def dyadic(numerator: int, exponent: int) -> Fraction:
    """Exact numerator / 2^exponent (Fraction keeps it canonical)."""
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    return Fraction(numerator, 1 << exponent)


def is_dyadic(x: Fraction) -> bool:
    d = Fraction(x).denominator
    return d & (d - 1) == 0


def dyadic_parts(x: Fraction) -> tuple[int, int]:
    """Write x as numerator / 2^exponent; error if x is not dyadic."""
    x = Fraction(x)
    if not is_dyadic(x):
        raise ValueError(f"{x} is not a dyadic rational")
    return x.numerator, x.denominator.bit_length() - 1


@dataclass(frozen=True)
class RationalInterval:
    """Interval with exact rational endpoints and per-endpoint closure."""

    left: Fraction
    right: Fraction
    closed_left: bool = True
    closed_right: bool = True

    def __post_init__(self):
        object.__setattr__(self, "left", Fraction(self.left))
        object.__setattr__(self, "right", Fraction(self.right))
        if self.left > self.right:
            raise ValueError(f"left {self.left} > right {self.right}")

    @property
    def width(self) -> Fraction:
        return self.right - self.left

    @property
    def midpoint(self) -> Fraction:
        return (self.left + self.right) / 2

    def is_degenerate(self) -> bool:
        return self.left == self.right

    def contains(self, x: Fraction) -> bool:
        x = Fraction(x)
        if x < self.left or x > self.right:
            return False
        if x == self.left and not self.closed_left:
            return False
        if x == self.right and not self.closed_right:
            return False
        return True

    def intersects(self, other: "RationalInterval") -> bool:
        """Exact nonempty-intersection test honoring closure flags."""
        lo = max(self.left, other.left)
        hi = min(self.right, other.right)
        if lo < hi:
            return True
        if lo > hi:
            return False
        return self.contains(lo) and other.contains(lo)

    def __str__(self):
        lb = "[" if self.closed_left else "("
        rb = "]" if self.closed_right else ")"
        return f"{lb}{self.left}, {self.right}{rb}"


@dataclass(frozen=True)
class CubeIndex:
    """A dyadic cube: level plus integer coordinates plus closure mode."""

    level: int
    coords: tuple[int, ...]
    mode: str = CLOSED

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    @property
    def volume(self) -> Fraction:
        return self.side**self.dim

    @property
    def closed(self) -> bool:
        return self.mode == CLOSED

    def closure(self) -> "CubeIndex":
        return CubeIndex(self.level, self.coords, CLOSED)

    def extent(self, axis: int = 0) -> RationalInterval:
        k = self.coords[axis]
        side = self.side
        return RationalInterval(k * side, (k + 1) * side, True, self.closed)

    def interval(self) -> RationalInterval:
        if self.dim != 1:
            raise UnsupportedDimension("interval() needs d = 1")
        return self.extent(0)

    def contains_point(self, point: Sequence[Fraction]) -> bool:
        if len(point) != self.dim:
            raise UnsupportedDimension("point dimension mismatch")
        return all(self.extent(i).contains(x) for i, x in enumerate(point))


def make_cube(level: int, coords: Iterable[int], mode: str = CLOSED) -> CubeIndex:
    """Validated cube constructor; coordinates must lie in [0, 2^level - 1]."""
    if level < 0:
        raise CoordOutOfRange(f"level must be >= 0, got {level}")
    if mode not in (CLOSED, HALF_OPEN):
        raise ValueError(f"mode must be {CLOSED!r} or {HALF_OPEN!r}")
    check_level(level)
    ks = tuple(int(k) for k in coords)
    if not ks:
        raise UnsupportedDimension("need at least one coordinate")
    top = (1 << level) - 1
    for i, k in enumerate(ks):
        if k < 0 or k > top:
            raise CoordOutOfRange(f"coords[{i}]={k} not in [0, {top}] at level {level}")
    return CubeIndex(level, ks, mode)


def parent(cube: CubeIndex) -> CubeIndex:
    if cube.level == 0:
        raise NoParent("level-0 cube has no parent")
    return CubeIndex(cube.level - 1, tuple(k // 2 for k in cube.coords), cube.mode)


def children(cube: CubeIndex) -> list[CubeIndex]:
    """The 2^d cubes of the next level contained in this cube."""
    from itertools import product

    check_level(cube.level + 1)
    options = [(2 * k, 2 * k + 1) for k in cube.coords]
    return [CubeIndex(cube.level + 1, ks, cube.mode) for ks in product(*options)]


def navigate(cube: CubeIndex, direction: str):
    """Tree navigation: direction is 'parent' or 'children'."""
    if direction == "parent":
        return parent(cube)
    if direction == "children":
        return children(cube)
    raise ValueError(f"unknown direction {direction!r}")


def min_distance(a: CubeIndex, b: CubeIndex) -> Fraction:
    """Exact inf distance between two same-level cubes (sup metric for d>1).

    Zero iff the cubes touch or coincide; in d = 1 this is the usual gap
    max(0, |k - j| - 1) * 2^-n.
    """
    if a.level != b.level:
        raise LevelMismatch(f"levels {a.level} != {b.level}")
    if a.dim != b.dim:
        raise UnsupportedDimension("dimension mismatch")
    side = a.side
    gap = 0
    for ka, kb in zip(a.coords, b.coords):
        gap = max(gap, max(0, abs(ka - kb) - 1))
    return gap * side


def enlarge_beta(cube: CubeIndex, beta: Fraction) -> RationalInterval:
    """The interval of length |Q|^beta = 2^(-n*beta) concentric with Q (d=1).

    No clipping to [0,1]: callers compare the union of enlargements against
    the unit interval downstream.  When n*beta is an integer the endpoints
    are exact; otherwise the length is rounded down to an inner dyadic
    approximation within relative 2^-40 of 2^(-n beta).
    """
    if cube.dim != 1:
        raise UnsupportedDimension("beta-enlargement defined for d = 1 only")
    beta = Fraction(beta)
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    nb = cube.level * beta
    if nb.denominator == 1:
        half = Fraction(1, 2 ** (nb.numerator + 1))
    else:
        # inner dyadic approximation of 2^(-n beta - 1): scale a directed
        # float estimate by (1 - 2^-40) so it never exceeds the true value
        import math

        scaled = math.floor(2.0 ** (64 - float(nb)) * (1.0 - 2.0**-40))
        half = Fraction(scaled, 1 << 65)
    center = cube.interval().midpoint
    return RationalInterval(center - half, center + half)
