"""Random selection families {Z_n(Q)} over the dyadic grid.

Two models:

* Bernoulli — every level-n cube is chosen independently (across cubes and
  across levels) with a homogeneous probability, either the power law
  P_n = 2^(-n*gamma) or an explicit per-level table.
* Point process — a single sequence of i.i.d. uniform points on [0,1] is
  split into disjoint index blocks, one block per level; a closed cube is
  chosen at level n when some point of block n lands in it.  Block
  boundaries follow either a staircase rule (piecewise-constant boundary
  2^(M_k t_k) driven by schedules (n_k), (t_k), with b_n = 1 before the
  first block) or a power rule 2^(n(1-gamma0)).

Both models are homogeneous: P_n(Q) does not depend on Q, which the index
estimators and the correlation reductions exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._pow2 import MAX_EXACT_BITS, log2_int, pow2_ceil
from .errors import CapacityError, LevelCapExceeded, UnsupportedDimension
from .grid import CubeIndex, check_level

_MAX_RATIONAL_DENOMINATOR = 1 << 16
_MAX_MATERIALIZED = 1 << 24
_LOG2_TINY = -40.0  # below this, log2(1-(1-2^-n)^C) == log2(C) - n to 2^-40


def _exact_rational(x, name: str) -> Fraction:
    """Coerce a parameter to an exact rational.

    Floats are taken at their exact binary value, so a float like 0.3
    (denominator 2^52, not 3/10) is rejected with a hint to pass a
    Fraction or a 'p/q' string; deliberately exact rationals of any
    denominator pass through.
    """
    f = Fraction(x)
    if isinstance(x, float) and f.denominator > _MAX_RATIONAL_DENOMINATOR:
        raise ValueError(
            f"{name}={x!r} has denominator {f.denominator}; pass an exact "
            "rational (e.g. Fraction(3, 10) or '3/10') instead of a float"
        )
    return f


@dataclass(frozen=True)
class LevelSelection:
    """Outcome of sampling one level: the chosen cubes (and raw points)."""

    level: int
    dim: int
    chosen: np.ndarray  # sorted unique flat cube indices
    points: np.ndarray | None = None

    def cubes(self):
        side = 1 << self.level
        for flat in self.chosen:
            flat = int(flat)
            coords = []
            for _ in range(self.dim):
                coords.append(flat % side)
                flat //= side
            yield CubeIndex(self.level, tuple(reversed(coords)))

    def __len__(self) -> int:
        return len(self.chosen)


@dataclass(frozen=True)
class BernoulliSpec:
    """Independent Bernoulli selections with homogeneous per-level P_n."""

    gamma: Fraction | None = None
    table: dict[int, Fraction] | None = None
    dim: int = 1

    def __post_init__(self):
        if (self.gamma is None) == (self.table is None):
            raise ValueError("give exactly one of gamma= or table=")
        if self.gamma is not None:
            g = Fraction(self.gamma)
            if g < 0:
                raise ValueError("gamma must be >= 0")
            object.__setattr__(self, "gamma", g)
        else:
            tbl = {int(n): Fraction(p) for n, p in self.table.items()}
            for n, p in tbl.items():
                if not 0 <= p <= 1:
                    raise ValueError(f"table[{n}]={p} outside [0, 1]")
            object.__setattr__(self, "table", tbl)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def prob(self, n: int) -> Fraction:
        """Exact P_n (for irrational 2^(-n gamma), a 64-significant-bit
        dyadic stand-in, rounded down)."""
        if self.gamma is not None:
            e = n * self.gamma
            if e.denominator == 1:
                return Fraction(1, 1 << e.numerator)
            from ._pow2 import pow2_floor

            shift = -(-e.numerator // e.denominator) + 64  # ceil(e) + 64
            return Fraction(pow2_floor(shift - e), 1 << shift)
        if n not in self.table:
            raise KeyError(f"no table probability for level {n}")
        return self.table[n]


@dataclass(frozen=True)
class StaircaseBoundary:
    """b_n = 2^(M_k t_k) on [M_k, M_(k+1)), b_n = 1 before the first block."""

    n_seq: tuple[int, ...]
    t_seq: tuple[Fraction, ...]

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_seq)
        ts = tuple(_exact_rational(t, "t") for t in self.t_seq)
        if len(ns) != len(ts):
            raise ValueError("n_seq and t_seq must have equal length")
        if not ns:
            raise ValueError("need at least one block")
        if any(n < 1 for n in ns):
            raise ValueError("n_seq entries must be >= 1")
        for a, b in zip(ts, ts[1:]):
            if not a < b:
                raise ValueError("t_seq must be strictly increasing")
        if any(not 0 < t < 1 for t in ts):
            raise ValueError("t values must lie in (0, 1)")
        object.__setattr__(self, "n_seq", ns)
        object.__setattr__(self, "t_seq", ts)

    @property
    def level_sums(self) -> tuple[int, ...]:
        out, m = [], 0
        for n in self.n_seq:
            m += n
            out.append(m)
        return tuple(out)

    def boundary_exponent(self, n: int) -> Fraction | None:
        """log2 b_n as an exact rational; None encodes b_n = 1."""
        if n < 0:
            raise ValueError("level must be >= 0")
        sums = self.level_sums
        if n < sums[0]:
            return None
        k = 0
        while k + 1 < len(sums) and n >= sums[k + 1]:
            k += 1
        return sums[k] * self.t_seq[k]


@dataclass(frozen=True)
class PowerBoundary:
    """b_n = 2^(n(1-gamma0))."""

    gamma0: Fraction

    def __post_init__(self):
        g = _exact_rational(self.gamma0, "gamma0")
        if not 0 <= g < 1:
            raise ValueError("gamma0 must lie in [0, 1)")
        object.__setattr__(self, "gamma0", g)

    def boundary_exponent(self, n: int) -> Fraction:
        if n < 0:
            raise ValueError("level must be >= 0")
        return n * (1 - self.gamma0)


@dataclass(frozen=True)
class PointProcessSpec:
    """Uniform point blocks marking closed cubes (d = 1 only)."""

    boundary: StaircaseBoundary | PowerBoundary

    @property
    def dim(self) -> int:
        return 1

    def ceil_boundary(self, n: int) -> int:
        e = self.boundary.boundary_exponent(n)
        if e is None:
            return 1
        if e.numerator > MAX_EXACT_BITS * e.denominator:
            raise CapacityError(f"boundary 2^{float(e):.4g} too large to hold")
        return pow2_ceil(e)

    def block_count(self, n: int) -> int:
        """Number of point indices in [b_(n-1), b_n)."""
        if n < 1:
            raise ValueError("levels start at 1")
        return self.ceil_boundary(n) - self.ceil_boundary(n - 1)

    def block_count_log2(self, n: int) -> float:
        """log2 of the block count without materializing huge integers."""
        e_hi = self.boundary.boundary_exponent(n)
        e_lo = self.boundary.boundary_exponent(n - 1)
        if e_hi is None:
            return -math.inf
        hi = float(e_hi)
        lo = 0.0 if e_lo is None else float(e_lo)
        if hi - lo > 60:
            return hi  # lower boundary negligible
        c = self.ceil_boundary(n) - self.ceil_boundary(n - 1)
        return log2_int(c) if c > 0 else -math.inf


SelectionModel = BernoulliSpec | PointProcessSpec


def block_count(spec: PointProcessSpec, n: int) -> int:
    return spec.block_count(n)


def exact_hit_prob(spec: SelectionModel, n: int, cube: CubeIndex | None = None):
    """Exact P_n(Q) = P(Z_n(Q) = 1); homogeneous, so `cube` is optional.

    Bernoulli returns the rule value.  The point process returns
    1 - (1 - 2^-n)^C_n exactly (inclusion-exclusion collapses because the
    block points are i.i.d. uniform).
    """
    if cube is not None and cube.level != n:
        raise ValueError(f"cube level {cube.level} != {n}")
    if isinstance(spec, BernoulliSpec):
        return spec.prob(n)
    if cube is not None and cube.dim != 1:
        raise UnsupportedDimension("point process is one-dimensional")
    c = spec.block_count(n)
    if c == 0:
        return Fraction(0)
    if n * c > MAX_EXACT_BITS:
        raise CapacityError(
            f"exact probability needs {n * c} bits; use hit_prob_log2"
        )
    den = 1 << (n * c)
    num = ((1 << n) - 1) ** c
    return Fraction(den - num, den)


def hit_prob_log2(spec: SelectionModel, n: int) -> float:
    """log2 P_n, valid far beyond what floats or exact fractions can hold."""
    if isinstance(spec, BernoulliSpec):
        if spec.gamma is not None:
            return -n * float(spec.gamma)
        p = spec.prob(n)
        if p == 0:
            return -math.inf
        return log2_int(p.numerator) - log2_int(p.denominator)
    c = spec.block_count_log2(n)
    if c == -math.inf:
        return -math.inf
    level_bits = c - n
    if level_bits < _LOG2_TINY:
        # P = C 2^-n (1 + O(C 2^-n)); correction below 2^-40
        return level_bits
    if level_bits > 40:
        return 0.0  # 1 - P below any float resolution
    cc = spec.block_count(n)
    t = cc * math.log1p(-(2.0**-n))
    p = -math.expm1(t)
    if p < 0.5:
        return math.log2(p)
    return math.log1p(-math.exp(t)) / math.log(2)


def _sample_distinct(rng: np.random.Generator, total: int, count: int) -> np.ndarray:
    """`count` distinct uniform indices from range(total), sorted."""
    if count < 0 or count > total:
        raise ValueError("count outside [0, total]")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    if count == total:
        return np.arange(total, dtype=np.int64)
    invert = count > total // 2
    want = total - count if invert else count
    seen: set[int] = set()
    while len(seen) < want:
        batch = rng.integers(0, total, size=max(16, int((want - len(seen)) * 1.2)))
        for v in batch.tolist():
            if len(seen) >= want:
                break
            seen.add(v)
    picked = np.fromiter(seen, dtype=np.int64, count=want)
    picked.sort()
    if invert:
        mask = np.ones(total, dtype=bool)
        mask[picked] = False
        return np.nonzero(mask)[0].astype(np.int64)
    return picked


def point_cube_indices(points: np.ndarray, n: int) -> np.ndarray:
    """Sorted unique indices of closed level-n cubes containing the points.

    A point sitting exactly on an interior grid face belongs to both
    adjacent closed cubes and marks both.
    """
    scaled = points * float(1 << n)
    idx = np.floor(scaled).astype(np.int64)
    np.clip(idx, 0, (1 << n) - 1, out=idx)
    on_face = (scaled == idx) & (idx > 0)
    if on_face.any():
        idx = np.concatenate([idx, idx[on_face] - 1])
    return np.unique(idx)


def sample_level(
    spec: SelectionModel, n: int, rng: np.random.Generator, cap: int | None = None
) -> LevelSelection:
    """Draw one realization of level n.  Deterministic given the stream."""
    check_level(n, cap)
    if isinstance(spec, BernoulliSpec):
        total_bits = n * spec.dim
        if total_bits > 62:
            raise CapacityError(f"2^{total_bits} cubes cannot be enumerated")
        total = 1 << total_bits
        p = float(spec.prob(n))
        count = int(rng.binomial(total, p))
        if count > _MAX_MATERIALIZED:
            raise CapacityError(
                f"selection would materialize {count} cubes (> {_MAX_MATERIALIZED})"
            )
        return LevelSelection(n, spec.dim, _sample_distinct(rng, total, count))
    c = spec.block_count(n)
    if c > _MAX_MATERIALIZED:
        raise CapacityError(f"block of {c} points too large to materialize")
    pts = rng.random(c)
    return LevelSelection(n, 1, point_cube_indices(pts, n), points=pts)


def index_estimates(
    spec: SelectionModel, levels: Sequence[int]
) -> tuple[list[float], list[float]]:
    """Finite-n decay-rate estimates (gamma1_hat, gamma2_hat) per level.

    gamma1_hat(n) = -log2(max_Q P_n(Q)) / n and gamma2_hat uses the min;
    both models are homogeneous so the two sequences coincide.  Levels with
    P_n = 0 report +inf (the log2 0 = -inf convention).
    """
    g1, g2 = [], []
    for n in levels:
        if n < 1:
            raise ValueError("levels start at 1")
        l2 = hit_prob_log2(spec, n)
        val = math.inf if l2 == -math.inf else -l2 / n
        g1.append(val)
        g2.append(val)
    return g1, g2
