"""Homogeneous Cantor sets from generation schedules, with exact queries.

A schedule lists, per generation, how many children each interval spawns and
how long a child is relative to its parent.  Children are placed with the
first one flush against the parent's left endpoint, the last one flush
against the right endpoint, and the rest equally spaced; all endpoints are
exact rationals.  Built levels support exact cube-intersection tests and
dyadic covering counts (by pruned tree descent, never by enumerating the
full grid), which is what the hitting experiments consume.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from ._pow2 import log2_fraction, log2_int, pow2_floor
from .errors import (
    DegenerateGeneration,
    LevelCapExceeded,
    SearchOverflow,
    UnsupportedDimension,
)
from .grid import CubeIndex, RationalInterval, make_cube, HALF_OPEN

DEFAULT_SEARCH_BOUND = 1 << 50
MAX_BUILT_INTERVALS = 1 << 22


@dataclass(frozen=True)
class Generation:
    """One subdivision step: child count and child/parent length ratio."""

    count: int
    ratio: Fraction

    def __post_init__(self):
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if self.count < 2:
            raise DegenerateGeneration(f"child count {self.count} < 2")
        if self.count * self.ratio > 1:
            raise ValueError(
                f"{self.count} children of relative length {self.ratio} "
                "do not fit inside their parent"
            )


@dataclass(frozen=True)
class CantorSchedule:
    """Per-generation subdivision data defining a homogeneous Cantor set."""

    generations: tuple[Generation, ...]

    def __post_init__(self):
        object.__setattr__(self, "generations", tuple(self.generations))
        if not self.generations:
            raise ValueError("schedule needs at least one generation")

    @property
    def depth(self) -> int:
        return len(self.generations)

    def interval_count(self, k: int) -> int:
        """N_k: number of generation-k intervals (N_0 = 1)."""
        out = 1
        for g in self.generations[:k]:
            out *= g.count
        return out

    def length(self, k: int) -> Fraction:
        """l_k: generation-k interval length (l_0 = 1)."""
        out = Fraction(1)
        for g in self.generations[:k]:
            out *= g.ratio
        return out

    def is_dyadic(self) -> bool:
        from .grid import is_dyadic

        return all(is_dyadic(g.ratio) for g in self.generations)


def uniform_schedule(children: int, ratio: Fraction, depth: int) -> CantorSchedule:
    gen = Generation(children, Fraction(ratio))
    return CantorSchedule((gen,) * depth)


# ---------------------------------------------------------------------------
# Tuned schedules


@dataclass(frozen=True)
class BlockTunedSchedule:
    """Cantor schedule with per-generation (m_k, n_k) block tuning.

    Generation k subdivides into 2^m_k children of relative length 2^-n_k,
    where each m_(k+1) is the smallest integer making the packing-dimension
    lower bound work and each n_k the smallest integer >= m_k making the
    expected block hit count summable (<= 2^-k).  Packing dimension of the
    limit set tends to 1 while a matched staircase point process almost
    surely misses it.
    """

    m_seq: tuple[int, ...]
    n_seq: tuple[int, ...]
    t_seq: tuple[Fraction, ...]

    @property
    def depth(self) -> int:
        return len(self.n_seq)

    def level_sum(self, k: int) -> int:
        """M_k = n_1 + ... + n_k."""
        return sum(self.n_seq[:k])

    def schedule(self) -> CantorSchedule:
        return CantorSchedule(
            tuple(
                Generation(1 << m, Fraction(1, 1 << n))
                for m, n in zip(self.m_seq, self.n_seq)
            )
        )

    def interval_count(self, k: int) -> int:
        return 1 << sum(self.m_seq[:k])

    def count_exponent(self, k: int) -> int:
        """log2 N_k, exact."""
        return sum(self.m_seq[:k])


def _ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _summability_holds(n: int, k: int, m_sum: int, M_prev: int, t: Fraction) -> bool:
    """Exact test: n * 2^m_sum * 2^-(M_prev+n) * 2^((M_prev+n) t) <= 2^-k."""
    s = 1 - t
    sp, q = s.numerator, s.denominator
    # log2 n <= (M_prev + n) s - m_sum - k, cleared of denominators:
    # n^q <= 2^((M_prev + n) sp - (m_sum + k) q)
    e = (M_prev + n) * sp - (m_sum + k) * q
    if e < 0:
        return False
    v = n**q
    bl = v.bit_length()
    if bl - 1 < e:
        return True
    if bl - 1 > e:
        return False
    return v == 1 << e


def block_tuned_schedule(
    t_seq: Sequence[Fraction],
    depth: int,
    m1: int = 2,
    search_bound: int = DEFAULT_SEARCH_BOUND,
) -> BlockTunedSchedule:
    """Tune (m_k, n_k) for the given increasing t_k in (0,1).

    n_k is the smallest integer >= m_k with n_k N_k l_k 2^(M_k t_k) <= 2^-k;
    m_(k+1) is the smallest integer with 2^(m(1-t_k)) N_k l_k^t_k >= 1.  All
    comparisons are exact (integer powers against powers of two), so the
    search is reproducible at any magnitude.
    """
    ts = [Fraction(t) for t in t_seq]
    if len(ts) < depth:
        raise ValueError(f"need {depth} t values, got {len(ts)}")
    for a, b in zip(ts, ts[1:]):
        if not a < b:
            raise ValueError("t sequence must be strictly increasing")
    if any(not 0 < t < 1 for t in ts):
        raise ValueError("t values must lie in (0, 1)")
    if m1 < 1:
        raise ValueError("m1 must be >= 1")

    m_seq = [m1]
    n_seq: list[int] = []
    M = 0
    m_sum = m1
    for k in range(1, depth + 1):
        t = ts[k - 1]
        s = 1 - t
        # linear scan through the possibly non-monotone head, then bisect in
        # the monotone tail where n 2^(-n s) is decreasing
        threshold = int(1 / (float(s) * math.log(2))) + 2
        n = m_seq[-1]
        found = None
        while n <= min(threshold, search_bound):
            if _summability_holds(n, k, m_sum, M, t):
                found = n
                break
            n += 1
        if found is None:
            lo = max(n, threshold + 1)
            hi = lo
            while not _summability_holds(hi, k, m_sum, M, t):
                lo = hi + 1
                hi *= 2
                if hi > search_bound:
                    raise SearchOverflow(
                        f"no n_{k} <= {search_bound} satisfies the summability bound"
                    )
            while lo < hi:
                mid = (lo + hi) // 2
                if _summability_holds(mid, k, m_sum, M, t):
                    hi = mid
                else:
                    lo = mid + 1
            found = lo
        n_seq.append(found)
        M += found
        if k < depth:
            # smallest m with m(1-t_k) >= M_k t_k - log2 N_k  (all rational)
            m_next = _ceil_fraction((M * t - m_sum) / s)
            if m_next <= m_seq[-1]:
                m_next = m_seq[-1] + 1
            if m_next > search_bound:
                raise SearchOverflow(f"m_{k + 1} exceeds bound {search_bound}")
            m_seq.append(m_next)
            m_sum += m_next
    return BlockTunedSchedule(tuple(m_seq), tuple(n_seq), tuple(ts[:depth]))


def floor_power_schedule(t: Fraction, n_seq: Sequence[int]) -> CantorSchedule:
    """Schedule with floor(2^(n_k t)) children of relative length 2^-n_k.

    The limit set has Hausdorff dimension t; packing dimension can be pushed
    to 1 by growing n_k fast.  Child counts use exact integer root
    extraction, so floors are reproducible for any rational t.
    """
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    gens = []
    for n in n_seq:
        if n < 1:
            raise ValueError("n_seq entries must be >= 1")
        c = pow2_floor(n * t)
        if c < 2:
            raise DegenerateGeneration(
                f"floor(2^({n}*{t})) = {c} < 2 children"
            )
        gens.append(Generation(c, Fraction(1, 1 << n)))
    return CantorSchedule(tuple(gens))


# ---------------------------------------------------------------------------
# Built levels


@dataclass(frozen=True)
class CantorLevels:
    """Exact interval lists per generation, sorted left to right."""

    schedule: CantorSchedule
    generations: tuple[tuple[RationalInterval, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.generations)

    def generation(self, k: int) -> tuple[RationalInterval, ...]:
        """Generation k intervals; k = 0 is the unit interval."""
        if k == 0:
            return (RationalInterval(Fraction(0), Fraction(1)),)
        return self.generations[k - 1]


def build_levels(
    schedule: CantorSchedule,
    depth: int | None = None,
    max_intervals: int = MAX_BUILT_INTERVALS,
) -> CantorLevels:
    """Materialize generations 1..depth with exact endpoints."""
    depth = schedule.depth if depth is None else depth
    if depth > schedule.depth:
        raise ValueError(f"depth {depth} exceeds schedule depth {schedule.depth}")
    if schedule.interval_count(depth) > max_intervals:
        raise LevelCapExceeded(
            f"generation {depth} has {schedule.interval_count(depth)} intervals "
            f"(> {max_intervals}); deepen max_intervals only with care"
        )
    gens: list[tuple[RationalInterval, ...]] = []
    current = [(Fraction(0), Fraction(1))]
    length = Fraction(1)
    for g in schedule.generations[:depth]:
        child_len = length * g.ratio
        out = []
        for left, right in current:
            parent_len = right - left
            if g.count == 2:
                positions = [left, right - child_len]
            else:
                gap = (parent_len - g.count * child_len) / (g.count - 1)
                step = child_len + gap
                positions = [left + i * step for i in range(g.count - 1)]
                positions.append(right - child_len)
            out.extend((p, p + child_len) for p in positions)
        current = out
        length = child_len
        gens.append(tuple(RationalInterval(a, b) for a, b in out))
    return CantorLevels(schedule, tuple(gens))


# ---------------------------------------------------------------------------
# Target sets


def _interval_meets_cube(
    left: Fraction, right: Fraction, cube: RationalInterval, cube_closed: bool
) -> bool:
    """Does the closed target interval [left, right] meet the cube?

    Closed cubes use the full closed-closed test, so a shared endpoint
    counts.  Half-open cubes coerce the target interval to right-open as
    well, which keeps covering counts unambiguous at shared grid faces: a
    target component ending exactly on a cube face is charged to the cube
    on its left, never to both.  Degenerate (point) components fall back to
    plain membership.
    """
    if cube_closed:
        return left <= cube.right and right >= cube.left
    if left == right:
        return cube.left <= left < cube.right
    return max(left, cube.left) < min(right, cube.right)


class TargetSet:
    """Oracle view of a compact target: intersection tests, covering counts.

    covered_level is the deepest dyadic level at which querying the built
    truncation still makes sense as a stand-in for the limit object.
    """

    covered_level: int

    def intersects(self, cube: CubeIndex) -> bool:
        raise NotImplementedError

    def covering_ranges(self, n: int) -> list[tuple[int, int]]:
        """Sorted disjoint half-open coordinate ranges of level-n cubes
        meeting the target (half-open counting convention)."""
        raise NotImplementedError

    def covering_count(self, n: int) -> int:
        return sum(b - a for a, b in self.covering_ranges(n))

    def components(self) -> list[tuple[Fraction, Fraction]]:
        """Closed components of the target, sorted."""
        raise NotImplementedError

    def min_cover_balls(self, n: int) -> list[Fraction]:
        """Left endpoints of a minimal cover by closed length-2^-n intervals.

        Greedy sweep over the components, which is optimal for a finite
        union of closed intervals.
        """
        ell = Fraction(1, 1 << n)
        balls: list[Fraction] = []
        cover_end: Fraction | None = None
        for c, d in self.components():
            if cover_end is None or cover_end < c:
                balls.append(c)
                cover_end = c + ell
            while cover_end < d:
                balls.append(cover_end)
                cover_end = cover_end + ell
        return balls


class FullCubeTarget(TargetSet):
    """The whole unit interval."""

    covered_level = 10**9

    def intersects(self, cube: CubeIndex) -> bool:
        if cube.dim != 1:
            raise UnsupportedDimension("targets are one-dimensional")
        return True

    def covering_ranges(self, n: int) -> list[tuple[int, int]]:
        return [(0, 1 << n)]

    def components(self):
        return [(Fraction(0), Fraction(1))]


class SingletonTarget(TargetSet):
    """A single point."""

    covered_level = 10**9

    def __init__(self, point: Fraction):
        self.point = Fraction(point)
        if not 0 <= self.point <= 1:
            raise ValueError("point must lie in [0, 1]")

    def intersects(self, cube: CubeIndex) -> bool:
        if cube.dim != 1:
            raise UnsupportedDimension("targets are one-dimensional")
        return cube.interval().contains(self.point)

    def covering_ranges(self, n: int) -> list[tuple[int, int]]:
        k = min((self.point.numerator << n) // self.point.denominator, (1 << n) - 1)
        return [(k, k + 1)]

    def components(self):
        return [(self.point, self.point)]


class IntervalTarget(TargetSet):
    """A single closed interval [left, right]."""

    covered_level = 10**9

    def __init__(self, interval: RationalInterval):
        self.interval_ = RationalInterval(interval.left, interval.right)

    def intersects(self, cube: CubeIndex) -> bool:
        if cube.dim != 1:
            raise UnsupportedDimension("targets are one-dimensional")
        return _interval_meets_cube(
            self.interval_.left, self.interval_.right, cube.interval(), cube.closed
        )

    def covering_ranges(self, n: int) -> list[tuple[int, int]]:
        left, right = self.interval_.left, self.interval_.right
        scale = 1 << n
        if left == right:
            k = min((left.numerator * scale) // left.denominator, scale - 1)
            return [(k, k + 1)]
        k0 = (left.numerator * scale) // left.denominator
        # right-open coercion: cube k counts iff k 2^-n < right
        k1 = -((-right.numerator * scale) // right.denominator)  # ceil(right*scale)
        return [(max(0, k0), min(scale, k1))]

    def components(self):
        return [(self.interval_.left, self.interval_.right)]


class CantorTarget(TargetSet):
    """Finite truncation G_K of a homogeneous Cantor set."""

    def __init__(self, levels: CantorLevels):
        self.levels = levels
        final = levels.generation(levels.depth)
        self._lefts = [iv.left for iv in final]
        self._rights = [iv.right for iv in final]
        self._range_cache: dict[int, list[tuple[int, int]]] = {}
        length = levels.schedule.length(levels.depth)
        # deepest level n with 2^-n >= l_K
        q, p = length.denominator, length.numerator
        self.covered_level = (q // p).bit_length() - 1

    def components(self):
        return list(zip(self._lefts, self._rights))

    def intersects(self, cube: CubeIndex) -> bool:
        if cube.dim != 1:
            raise UnsupportedDimension("targets are one-dimensional")
        box = cube.interval()
        if cube.closed:
            i = bisect_left(self._rights, box.left)
            return i < len(self._lefts) and self._lefts[i] <= box.right
        i0, i1 = self._narrow(box, 0, len(self._lefts))
        return i1 > i0

    def _narrow(self, box: RationalInterval, lo: int, hi: int) -> tuple[int, int]:
        """Index range of components meeting the half-open cube `box`
        under the right-open coercion (components have positive length)."""
        i0 = bisect_right(self._rights, box.left, lo, hi)
        i1 = bisect_left(self._lefts, box.right, lo, hi)
        return i0, i1

    def covering_ranges(self, n: int) -> list[tuple[int, int]]:
        cached = self._range_cache.get(n)
        if cached is not None:
            return cached
        out: list[tuple[int, int]] = []

        def descend(level: int, k: int, lo: int, hi: int) -> None:
            box = RationalInterval(
                Fraction(k, 1 << level), Fraction(k + 1, 1 << level)
            )
            lo, hi = self._narrow(box, lo, hi)
            if lo >= hi:
                return
            if level == n:
                _push(out, k, k + 1)
                return
            if (
                hi - lo == 1
                and self._lefts[lo] <= box.left
                and self._rights[lo] >= box.right
            ):
                shift = n - level
                _push(out, k << shift, (k + 1) << shift)
                return
            descend(level + 1, 2 * k, lo, hi)
            descend(level + 1, 2 * k + 1, lo, hi)

        descend(0, 0, 0, len(self._lefts))
        self._range_cache[n] = out
        return out


def _push(ranges: list[tuple[int, int]], a: int, b: int) -> None:
    if ranges and ranges[-1][1] >= a:
        ranges[-1] = (ranges[-1][0], max(ranges[-1][1], b))
    else:
        ranges.append((a, b))


def covering_count(target: TargetSet, n: int, cap: int | None = None) -> int:
    """#{Q in the level-n half-open grid : Q meets the target}, exactly."""
    from .grid import check_level

    check_level(n, cap)
    return target.covering_count(n)


def covering_count_bruteforce(target: TargetSet, n: int) -> int:
    """Independent oracle: enumerate all 2^n cubes and test each one."""
    from .grid import check_level

    check_level(n)
    return sum(
        1
        for k in range(1 << n)
        if target.intersects(make_cube(n, [k], HALF_OPEN))
    )


# ---------------------------------------------------------------------------
# Dimension formulas for homogeneous Cantor sets


@dataclass(frozen=True)
class DimensionEstimates:
    """Per-generation dimension quotients and tail-window limit surrogates.

    hdim_seq[k-1] = log N_(k+1) / (-log l_k)          (liminf -> Hausdorff)
    pdim_seq[k-1] = log N_(k+1) / (-log l_k + log(N_(k+1)/N_k))
                                                      (limsup -> packing)
    Limit estimates are the min/max over the last `window` terms; no
    extrapolation beyond the computed horizon is attempted.
    """

    hdim_seq: tuple[float, ...]
    pdim_seq: tuple[float, ...]
    hdim_limit_est: float
    pdim_limit_est: float
    window: int
    hdim_seq_exact: tuple[Fraction, ...] | None = None
    pdim_seq_exact: tuple[Fraction, ...] | None = None


def dimension_sequences(
    schedule: CantorSchedule, horizon: int, window: int | None = None
) -> DimensionEstimates:
    """Evaluate the homogeneous-Cantor dimension quotients up to `horizon`.

    Requires schedule depth >= horizon + 1 since the k-th quotient looks one
    generation ahead.  When every child count is a power of two and every
    ratio is dyadic the sequences are also returned as exact rationals.
    """
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    if schedule.depth < horizon + 1:
        raise ValueError(
            f"schedule depth {schedule.depth} < horizon {horizon} + 1"
        )
    exact = all(
        g.count & (g.count - 1) == 0
        and g.ratio.numerator == 1
        and g.ratio.denominator & (g.ratio.denominator - 1) == 0
        for g in schedule.generations
    )
    h_f: list[float] = []
    p_f: list[float] = []
    h_x: list[Fraction] = []
    p_x: list[Fraction] = []
    log_n = 0.0  # log2 N_k
    log_l = 0.0  # -log2 l_k
    exact_log_n = 0
    exact_log_l = 0
    for k in range(1, horizon + 1):
        g = schedule.generations[k - 1]
        g_next = schedule.generations[k]
        log_n += math.log2(g.count)
        log_l += -log2_fraction(g.ratio)
        next_count = math.log2(g_next.count)
        h_f.append((log_n + next_count) / log_l)
        p_f.append((log_n + next_count) / (log_l + next_count))
        if exact:
            exact_log_n += g.count.bit_length() - 1
            num, exp = g.ratio.numerator, g.ratio.denominator.bit_length() - 1
            exact_log_l += exp - (num.bit_length() - 1)
            nc = g_next.count.bit_length() - 1
            h_x.append(Fraction(exact_log_n + nc, exact_log_l))
            p_x.append(Fraction(exact_log_n + nc, exact_log_l + nc))
    window = max(1, horizon // 2) if window is None else window
    tail_h = h_f[-window:]
    tail_p = p_f[-window:]
    return DimensionEstimates(
        hdim_seq=tuple(h_f),
        pdim_seq=tuple(p_f),
        hdim_limit_est=min(tail_h),
        pdim_limit_est=max(tail_p),
        window=window,
        hdim_seq_exact=tuple(h_x) if exact else None,
        pdim_seq_exact=tuple(p_x) if exact else None,
    )


def block_tuned_packing_quotients(tuned: BlockTunedSchedule) -> list[Fraction]:
    """Exact packing quotients p_k for a block-tuned schedule.

    p_k = (m_1 + ... + m_(k+1)) / (M_k + m_(k+1)); the tuning of m_(k+1)
    guarantees p_k >= t_k at every generation it was chosen for.
    """
    out = []
    for k in range(1, tuned.depth):
        num = sum(tuned.m_seq[: k + 1])
        den = tuned.level_sum(k) + tuned.m_seq[k]
        out.append(Fraction(num, den))
    return out
