"""Finite-truncation hitting experiments with analytic oracles.

The limsup event itself lives at infinity; everything here replaces it by
finite-window or per-level surrogates that have closed-form expectations:

* window hit probability  — P(some level n in [lo, hi] selects a cube
  meeting the target), with the exact product oracle from cross-level
  independence;
* hit count statistics    — the second-moment statistic S_n with its
  Paley-Zygmund lower bound (E S)^2 / E S^2;
* cover count statistic   — the ball-cover statistic H_n driving the
  upper dimension bound;
* box dimension fit       — least squares slope of log2 counts;
* beta coverage           — does the union of beta-enlarged chosen cubes
  cover [0,1]?  (interval sweep, never a cell array);
* nested family counting  — the exact integer recursion for the
  floor-power Cantor construction, whose two log ratios converge to
  1 - gamma0 and t;
* block expected hits     — the exact summability chain showing the
  staircase point process eventually misses its block-tuned Cantor target.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Callable, Sequence

import gmpy2
import numpy as np

from ._pow2 import Scaled, log2_int, pow2_floor
from .cantor import BlockTunedSchedule, CantorTarget, TargetSet, build_levels
from .correlation import pp_joint_prob
from .errors import (
    DegenerateInput,
    DepthInsufficient,
    SideConditionViolated,
)
from .grid import check_level
from .models import (
    BernoulliSpec,
    PointProcessSpec,
    SelectionModel,
    StaircaseBoundary,
    exact_hit_prob,
)
from .rng import (
    TAG_COVERAGE,
    TAG_HIT_COUNT,
    TAG_WINDOW_HIT,
    TRIAL_BLOCK,
    trial_blocks,
)

_EPS = 1e-12


@dataclass(frozen=True)
class WindowSpec:
    """Level range [n_lo, n_hi] over which the hit event is tested."""

    n_lo: int
    n_hi: int

    def __post_init__(self):
        if not 1 <= self.n_lo <= self.n_hi:
            raise ValueError(f"need 1 <= n_lo <= n_hi, got {self}")
        check_level(self.n_hi)

    @property
    def levels(self) -> range:
        return range(self.n_lo, self.n_hi + 1)


def _map_blocks(fn: Callable, blocks: list, workers: int) -> list:
    if workers <= 1:
        return [fn(b) for b in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def _closed_union_boundaries(ranges: list[tuple[int, int]], n: int) -> np.ndarray:
    """Flat boundary array of the closed union of the cube ranges."""
    scale = float(1 << n)
    out = []
    for a, b in ranges:
        out.extend((a / scale, b / scale))
    return np.array(out)


def _points_in_union(points: np.ndarray, boundaries: np.ndarray) -> np.ndarray:
    """Membership of points in a closed union given its sorted boundaries."""
    right = np.searchsorted(boundaries, points, side="right")
    left = np.searchsorted(boundaries, points, side="left")
    return ((right % 2) == 1) | ((left % 2) == 1)


def _window_block_bernoulli(probs, counts, block) -> np.ndarray:
    start, keep, rng = block
    hits = np.zeros(TRIAL_BLOCK, dtype=bool)
    for p, n_cubes in zip(probs, counts):
        if n_cubes == 0 or p == 0.0:
            continue
        hits |= rng.binomial(n_cubes, p, size=TRIAL_BLOCK) > 0
    return hits[:keep]


def _window_block_points(level_data, block) -> np.ndarray:
    start, keep, rng = block
    hits = np.zeros(keep, dtype=bool)
    for n, c, boundaries in level_data:
        if c == 0:
            continue
        pts = rng.random((TRIAL_BLOCK, c))[:keep]
        hits |= _points_in_union(pts.ravel(), boundaries).reshape(keep, c).any(axis=1)
    return hits


@dataclass(frozen=True)
class WindowHitResult:
    window: WindowSpec
    trials: int
    empirical: float
    radius: float
    exact_oracle: float | None
    oracle_log_survival: float
    level_counts: tuple[int, ...]
    oracle_within_radius: bool | None


def window_hit_probability(
    model: SelectionModel,
    target: TargetSet,
    window: WindowSpec,
    trials: int,
    seed: int,
    workers: int = 1,
) -> WindowHitResult:
    """Monte Carlo frequency of the window hit event, plus its exact oracle.

    The hit event at level n is S_n > 0: some cube counted by the covering
    convention is selected (closures included for the point process, whose
    points on shared faces mark both neighbours).  Levels are independent
    in both models, so the oracle is 1 - prod_n (1 - p_n).
    """
    if target.covered_level < window.n_hi:
        raise DepthInsufficient(
            f"target covers level {target.covered_level} < n_hi {window.n_hi}"
        )
    levels = list(window.levels)
    ranges = {n: target.covering_ranges(n) for n in levels}
    counts = tuple(sum(b - a for a, b in ranges[n]) for n in levels)

    # survival = prod_n (1 - p_n), accumulated in log space so windows deep
    # in the saturated regime still compare strictly
    log_survival = 0.0
    if isinstance(model, BernoulliSpec):
        for n, cnt in zip(levels, counts):
            p = float(model.prob(n))
            if p >= 1.0 and cnt > 0:
                log_survival = -math.inf
                break
            log_survival += cnt * math.log1p(-p)
    else:
        for n in levels:
            mu = sum(b - a for a, b in ranges[n]) / float(1 << n)
            c = model.block_count(n)
            if mu >= 1.0 and c > 0:
                log_survival = -math.inf
                break
            log_survival += c * math.log1p(-mu)
    oracle = -math.expm1(log_survival)

    blocks = list(trial_blocks(trials, seed, TAG_WINDOW_HIT))
    if isinstance(model, BernoulliSpec):
        probs = [float(model.prob(n)) for n in levels]
        fn = partial(_window_block_bernoulli, probs, counts)
    else:
        level_data = [
            (n, model.block_count(n), _closed_union_boundaries(ranges[n], n))
            for n in levels
        ]
        fn = partial(_window_block_points, level_data)
    hit_arrays = _map_blocks(fn, blocks, workers)
    hits = np.concatenate(hit_arrays) if hit_arrays else np.zeros(0, dtype=bool)
    emp = float(hits.mean()) if trials else 0.0
    radius = 3.0 * math.sqrt(max(emp * (1.0 - emp), 0.0) / trials) if trials else 0.0
    ok = abs(emp - oracle) <= radius + _EPS
    return WindowHitResult(
        window=window,
        trials=trials,
        empirical=emp,
        radius=radius,
        exact_oracle=oracle,
        oracle_log_survival=log_survival,
        level_counts=counts,
        oracle_within_radius=ok,
    )


# ---------------------------------------------------------------------------
# Second-moment statistics


@dataclass(frozen=True)
class HitStatistics:
    """Moments and Monte Carlo behaviour of S_n = sum over counted cubes of
    the closed-cube selection indicator."""

    level: int
    cube_count: int
    exact_mean: Fraction
    exact_variance: Fraction
    exact_second_moment: Fraction
    pz_bound: float
    exact_pos_prob: float | None
    trials: int
    empirical_mean: float
    empirical_pos_freq: float
    radius: float
    pz_holds: bool


def _hit_count_block_bernoulli(p, n_cubes, block) -> np.ndarray:
    start, keep, rng = block
    return rng.binomial(n_cubes, p, size=TRIAL_BLOCK)[:keep]


def _hit_count_block_points(n, c, starts, ends, block) -> np.ndarray:
    start, keep, rng = block
    out = np.zeros(keep, dtype=np.int64)
    pts = rng.random((TRIAL_BLOCK, c))[:keep]
    scale = float(1 << n)
    top = (1 << n) - 1
    for i in range(keep):
        scaled = pts[i] * scale
        idx = np.floor(scaled).astype(np.int64)
        np.clip(idx, 0, top, out=idx)
        face = (scaled == idx) & (idx > 0)
        if face.any():
            idx = np.concatenate([idx, idx[face] - 1])
        marked = np.unique(idx)
        # count marked cubes inside the covering ranges
        slot = np.searchsorted(starts, marked, side="right") - 1
        has = slot >= 0
        valid = np.zeros(len(marked), dtype=bool)
        valid[has] = marked[has] < ends[slot[has]]
        out[i] = int(valid.sum())
    return out


def hit_count_statistics(
    model: SelectionModel,
    target: TargetSet,
    n: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> HitStatistics:
    """Exact moments of S_n, its Paley-Zygmund bound, and Monte Carlo checks.

    For the independent model Var S_n = N P (1 - P); for the point process
    the second moment comes from the exact pairwise joint probability (the
    square of S_n only ever needs pairs).  The Paley-Zygmund inequality
    P(S > 0) >= (E S)^2 / E S^2 is asserted against the empirical positive
    frequency plus its radius.
    """
    if target.covered_level < n:
        raise DepthInsufficient(f"target covers {target.covered_level} < {n}")
    ranges = target.covering_ranges(n)
    count = sum(b - a for a, b in ranges)
    p = Fraction(exact_hit_prob(model, n))
    mean = count * p
    if isinstance(model, BernoulliSpec):
        var = count * p * (1 - p)
        pos = 0.0 if count == 0 else 1.0 - float(1 - p) ** count
    else:
        c = model.block_count(n)
        joint = pp_joint_prob(n, c)
        var = count * p * (1 - p) + count * (count - 1) * (joint - p * p)
        mu = sum(b - a for a, b in ranges) / Fraction(1 << n)
        pos = 0.0 if count == 0 else 1.0 - float(1 - mu) ** c
    second = var + mean * mean
    pz = 0.0 if mean == 0 else float(mean * mean / second)

    blocks = list(trial_blocks(trials, seed, TAG_HIT_COUNT))
    if isinstance(model, BernoulliSpec):
        fn = partial(_hit_count_block_bernoulli, float(p), count)
    else:
        starts = np.array([a for a, _ in ranges], dtype=np.int64)
        ends = np.array([b for _, b in ranges], dtype=np.int64)
        fn = partial(_hit_count_block_points, n, model.block_count(n), starts, ends)
    counts = np.concatenate(_map_blocks(fn, blocks, workers)) if trials else np.zeros(0)
    emp_mean = float(counts.mean()) if trials else 0.0
    pos_freq = float((counts > 0).mean()) if trials else 0.0
    radius = (
        3.0 * math.sqrt(max(pos_freq * (1 - pos_freq), 0.0) / trials) if trials else 0.0
    )
    return HitStatistics(
        level=n,
        cube_count=count,
        exact_mean=mean,
        exact_variance=var,
        exact_second_moment=second,
        pz_bound=pz,
        exact_pos_prob=pos,
        trials=trials,
        empirical_mean=emp_mean,
        empirical_pos_freq=pos_freq,
        radius=radius,
        pz_holds=pos_freq + radius >= pz - _EPS,
    )


# ---------------------------------------------------------------------------
# Ball-cover statistic


@dataclass(frozen=True)
class CoverCountStatistic:
    level: int
    ball_count: int
    neighbor_max: int
    exact_mean: Fraction
    slope: float
    gamma1_hat: float
    epsilon: float
    exponent: float
    constant: float
    bound_holds: bool


def cover_count_statistic(
    model: SelectionModel,
    target: TargetSet,
    n: int,
    slope_levels: Sequence[int] | None = None,
    epsilon: float = 0.05,
    factor_cap: float = 3.0,
) -> CoverCountStatistic:
    """Exact E H_n over a minimal ball cover, with the growth-bound check.

    H_n sums selection indicators over the <= 3 cubes meeting each ball of
    a minimal radius-2^(n+1) cover of the target.  E H_n is compared to
    factor_cap * 2^(n (slope - gamma1_hat + 2 epsilon)) where slope is the
    box-dimension fit of the target's covering counts.
    """
    balls = target.min_cover_balls(n)
    scale = 1 << n
    total = 0
    worst = 0
    for x in balls:
        u = x * scale
        k_min = max(0, -((-u.numerator) // u.denominator) - 1)  # ceil(u) - 1
        k_max = min(scale - 1, u.numerator // u.denominator + 1)
        size = k_max - k_min + 1
        worst = max(worst, size)
        total += size
    if worst > 3:
        raise AssertionError(f"ball met {worst} cubes; bound is 3 in d = 1")
    p = Fraction(exact_hit_prob(model, n))
    mean = total * p
    if slope_levels is None:
        slope_levels = range(max(1, n - 8), n + 1)
    fit = box_dim_estimate([(m, target.covering_count(m)) for m in slope_levels])
    from .models import hit_prob_log2

    g1 = -hit_prob_log2(model, n) / n
    exponent = n * (fit.slope - g1 + 2 * epsilon)
    constant = float(mean) / 2.0**exponent if mean > 0 else 0.0
    return CoverCountStatistic(
        level=n,
        ball_count=len(balls),
        neighbor_max=worst,
        exact_mean=mean,
        slope=fit.slope,
        gamma1_hat=g1,
        epsilon=epsilon,
        exponent=exponent,
        constant=constant,
        bound_holds=constant <= factor_cap + _EPS,
    )


# ---------------------------------------------------------------------------
# Box dimension fit


@dataclass(frozen=True)
class BoxDimFit:
    slope: float
    intercept: float
    residual: float
    points: int


def box_dim_estimate(counts: Sequence[tuple[int, int]]) -> BoxDimFit:
    """Least-squares slope of log2 N_n against n.

    Zero counts carry no information for the log fit and are dropped; if
    everything is zero (or fewer than 3 distinct levels remain) the input
    is degenerate.
    """
    pts = [(n, c) for n, c in counts if c > 0]
    if not pts:
        raise DegenerateInput("all covering counts are zero")
    if len({n for n, _ in pts}) < 3:
        raise DegenerateInput("need at least 3 distinct levels with nonzero counts")
    xs = np.array([n for n, _ in pts], dtype=float)
    ys = np.array([log2_int(c) for _, c in pts])
    (slope, intercept), res = np.polyfit(xs, ys, 1, full=True)[:2]
    ssr = float(res[0]) if len(res) else 0.0
    return BoxDimFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=math.sqrt(ssr / len(pts)),
        points=len(pts),
    )


# ---------------------------------------------------------------------------
# Coverage by enlarged cubes


@dataclass(frozen=True)
class BetaCoverageResult:
    level: int
    beta: Fraction
    gamma0: Fraction
    block_count: int
    trials: int
    empirical_coverage: float
    empirical_noncoverage: float
    radius: float
    bound_actual_count: float
    bound_idealized: float
    idealized_exponent: float
    noncover_within_bound: bool


def _coverage_block(n, c, max_gap, edge_limit, block) -> np.ndarray:
    start, keep, rng = block
    pts = rng.random((TRIAL_BLOCK, c))[:keep]
    scale = float(1 << n)
    top = (1 << n) - 1
    scaled = pts * scale
    idx = np.floor(scaled).astype(np.int64)
    np.clip(idx, 0, top, out=idx)
    face = (scaled == idx) & (idx > 0)
    covered = np.empty(keep, dtype=bool)
    for i in range(keep):
        row = idx[i]
        if face[i].any():
            row = np.concatenate([row, row[face[i]] - 1])
        row = np.sort(row)
        ok = row[0] <= edge_limit and (top - row[-1]) <= edge_limit
        if ok and len(row) > 1:
            ok = int(np.diff(row).max()) <= max_gap
        covered[i] = ok
    return covered


def beta_coverage(
    gamma0,
    beta,
    n: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> BetaCoverageResult:
    """Coverage of [0,1] by beta-enlargements of point-process cubes.

    Each sampled point marks its closed cube; the enlargement of a cube is
    the concentric interval of length 2^(-n beta).  Coverage reduces to an
    exact integer sweep over sorted marked-cube indices: adjacent marked
    cubes may be at most floor(2^(n - n beta)) apart and the extreme cubes
    must sit within half an enlargement of each end.

    The analytic non-coverage bound 2^n (1 - 2^(-n beta - 1))^E is reported
    twice: with the idealized exponent E = 2^(n (1 - gamma0)) and with the
    actual block count; the empirical check uses the actual-count bound.
    """
    from .models import PowerBoundary, _exact_rational

    beta = _exact_rational(beta, "beta")
    spec = PointProcessSpec(PowerBoundary(gamma0))
    g0 = spec.boundary.gamma0
    if not 0 < beta < 1 - g0:
        raise ValueError(f"beta must lie in (0, 1 - gamma0), got {beta}")
    check_level(n)
    c = spec.block_count(n)
    nb = n * beta
    max_gap = pow2_floor(n - nb)  # floor(2^(n - n beta))
    # leftmost marked cube k must satisfy k + 1/2 <= 2^(n - n beta)/2,
    # i.e. 2k + 1 <= max_gap; symmetric on the right
    edge_limit = (max_gap - 1) // 2

    blocks = list(trial_blocks(trials, seed, TAG_COVERAGE))
    fn = partial(_coverage_block, n, c, max_gap, edge_limit)
    covered = np.concatenate(_map_blocks(fn, blocks, workers))
    cov = float(covered.mean()) if trials else 0.0
    noncov = 1.0 - cov
    radius = 3.0 * math.sqrt(max(cov * (1 - cov), 0.0) / trials) if trials else 0.0

    base = 1.0 - 2.0 ** (-float(nb) - 1.0)
    ideal_exp = 2.0 ** (n * (1.0 - float(g0)))
    bound_ideal = (2.0**n) * base**ideal_exp
    bound_actual = (2.0**n) * base**c
    return BetaCoverageResult(
        level=n,
        beta=beta,
        gamma0=g0,
        block_count=c,
        trials=trials,
        empirical_coverage=cov,
        empirical_noncoverage=noncov,
        radius=radius,
        bound_actual_count=bound_actual,
        bound_idealized=bound_ideal,
        idealized_exponent=ideal_exp,
        noncover_within_bound=noncov <= min(1.0, bound_actual) + radius + _EPS,
    )


# ---------------------------------------------------------------------------
# Nested family counting (floor-power construction)


@dataclass(frozen=True)
class CountingTrace:
    """Exact family counts and their two limit-surrogate log ratios."""

    depth: int
    f_counts: tuple[int, ...]  # F_k, k = 1..depth
    g_counts: tuple[int, ...]  # G'_k, k = 1..depth (+1 via last f * b)
    ratio_f: tuple[float, ...]  # log2 F_k / m_k        -> 1 - gamma0
    ratio_g: tuple[float, ...]  # log2 G'_k / L_k       -> t
    ratio_f_tail: float
    ratio_g_tail: float


def nested_counting(
    t,
    n_seq: Sequence[int],
    m_seq: Sequence[int],
    t_m_seq: Sequence,
    depth: int,
) -> CountingTrace:
    """Exact counts of the nested families (F_k, G'_k) for the floor-power
    Cantor construction intersected with enlarged selected cubes.

    Recursion: F_1 = N_1 A_1, G'_(k+1) = F_k B_k, F_(k+1) = G'_(k+1) A_(k+1)
    with A_k = floor(l_k 2^(m_k t_(m_k))) - 2 and
    B_k = floor(2^(-m_k) floor(2^(n_(k+1) t)) / l_k) - 2.
    Side condition per generation: m_k t_(m_k) > n_1 + ... + n_k + 1.
    """
    from .models import _exact_rational

    t = _exact_rational(t, "t")
    tms = [_exact_rational(x, "t_m") for x in t_m_seq]
    ns = [int(x) for x in n_seq]
    ms = [int(x) for x in m_seq]
    if min(len(ns), len(ms), len(tms)) < depth:
        raise ValueError("sequences shorter than depth")
    if len(ns) < depth + 1:
        raise ValueError("need n_seq one generation past depth for the B factors")

    level_sum = 0
    f = None
    g = None
    f_counts: list[int] = []
    g_counts: list[int] = []
    ratio_f: list[float] = []
    ratio_g: list[float] = []
    n1_count = gmpy2.mpz(pow2_floor(ns[0] * t))
    for k in range(1, depth + 1):
        level_sum += ns[k - 1]
        tm = tms[k - 1]
        m = ms[k - 1]
        if not m * tm > level_sum + 1:
            raise SideConditionViolated(
                k, f"m_k t_(m_k) = {m * tm} <= {level_sum + 1}"
            )
        a = gmpy2.mpz(pow2_floor(m * tm - level_sum)) - 2
        if a <= 0:
            raise SideConditionViolated(k, f"degenerate A factor {a}")
        if k == 1:
            f = n1_count * a
            g = n1_count
        else:
            f = g * a
        # B_k uses the next generation's child count
        child_next = pow2_floor(ns[k] * t)
        if m <= level_sum:
            b = gmpy2.mpz(child_next << (level_sum - m)) - 2
        else:
            b = gmpy2.mpz(child_next >> (m - level_sum)) - 2
        if b <= 0:
            raise SideConditionViolated(k, f"degenerate B factor {b}")
        f_counts.append(int(f))
        g_counts.append(int(g))
        ratio_f.append(log2_int(int(f)) / m)
        ratio_g.append(log2_int(int(g)) / level_sum)
        g = f * b
    return CountingTrace(
        depth=depth,
        f_counts=tuple(f_counts),
        g_counts=tuple(g_counts),
        ratio_f=tuple(ratio_f),
        ratio_g=tuple(ratio_g),
        ratio_f_tail=ratio_f[-1],
        ratio_g_tail=ratio_g[-1],
    )


def example_counting_schedule(
    depth: int = 20,
) -> tuple[Fraction, Fraction, list[int], list[int], list[Fraction]]:
    """A schedule on which both counting ratios land near their limits.

    Returns (gamma0, t, n_seq, m_seq, t_m_seq) with gamma0 = 1/64 and
    t = 31/32.  m_k doubles each generation and t_(m_k) increases to
    1 - gamma0 with denominators dividing m_k, so every factor of the
    recursion is an exact shifted power of two; n_(k+1) tracks 0.53 m_k
    (rounded up to multiples of 32 so n t stays integral) with a floor
    keeping every B factor positive.
    """
    gamma0 = Fraction(1, 64)
    t = Fraction(31, 32)
    m_seq = [1 << (k + 6) for k in range(1, depth + 1)]
    t_m_seq = [
        Fraction(63, 64) - Fraction(1, 1 << (k + 2)) for k in range(1, depth + 1)
    ]
    n_seq = [64]
    level_sum = 64
    for k in range(1, depth + 1):
        b_floor = (m_seq[k - 1] + 3 - level_sum) / t
        want = max(0.53 * m_seq[k - 1], float(b_floor))
        nn = int(math.ceil(want / 32)) * 32
        n_seq.append(nn)
        level_sum += nn
    return gamma0, t, n_seq, m_seq, t_m_seq


# ---------------------------------------------------------------------------
# Summability chain for the block-tuned construction


@dataclass(frozen=True)
class BlockHitBound:
    generation: int
    level: int
    chain_log2: float  # log2 of n_k N_k l_k 2^(M_k t_k)
    budget_log2: float  # -k
    chain_within_budget: bool
    expected_within_chain: bool
    exact_expected: Fraction | None  # materialized for small generations


def block_expected_hits(
    tuned: BlockTunedSchedule, exact_upto: int = 1
) -> list[BlockHitBound]:
    """Verify the per-block expected hit-count chain, exactly.

    For each generation k the only level of block k with any points is
    M_k, where at most 2 N_k covering cubes meet the target (the
    per-generation gap condition n_k > m_k makes components cube-isolated)
    and P <= C 2^(-M_k) <= 2^(M_k t_k - M_k).  The chain asserts
    expected <= 2 n_k N_k l_k 2^(M_k t_k) <= 2^(-k+1) in exact
    scaled-exponent arithmetic; for k <= exact_upto the expectation is also
    materialized as an exact rational and checked directly.
    """
    out = []
    spec = PointProcessSpec(
        StaircaseBoundary(tuned.n_seq, tuned.t_seq)
    )
    m_sum = 0
    level = 0
    for k in range(1, tuned.depth + 1):
        m_sum += tuned.m_seq[k - 1]
        n_k = tuned.n_seq[k - 1]
        t_k = tuned.t_seq[k - 1]
        level += n_k
        # gap condition: sibling gaps exceed the component length
        if not n_k >= tuned.m_seq[k - 1] + 1:
            raise SideConditionViolated(k, f"n_k = {n_k} <= m_k = {tuned.m_seq[k-1]}")
        chain = Scaled(n_k, Fraction(m_sum - level) + level * t_k)
        budget = Scaled.pow2(-k)
        chain_ok = chain <= budget
        # expected <= 2 N_k * 2^(M_k t_k) * 2^(-M_k); compare against 2*chain
        upper = Scaled(2, Fraction(m_sum) + level * t_k - level)
        doubled = Scaled(2 * n_k, Fraction(m_sum - level) + level * t_k)
        expected_ok = upper <= doubled
        exact_expected = None
        if k <= exact_upto:
            schedule = BlockTunedSchedule(
                tuned.m_seq[:k], tuned.n_seq[:k], tuned.t_seq[:k]
            ).schedule()
            target = CantorTarget(build_levels(schedule))
            count = target.covering_count(level)
            p = Fraction(exact_hit_prob(spec, level))
            exact_expected = count * p
            lt = level * t_k
            if lt.denominator == 1:
                e = m_sum - level + lt.numerator
                chain_frac = (
                    2 * n_k * Fraction(1 << e)
                    if e >= 0
                    else Fraction(2 * n_k, 1 << -e)
                )
                if not exact_expected <= chain_frac:
                    raise AssertionError(
                        "exact expectation exceeded the chain bound"
                    )
        out.append(
            BlockHitBound(
                generation=k,
                level=level,
                chain_log2=chain.log2(),
                budget_log2=float(-k),
                chain_within_budget=chain_ok,
                expected_within_chain=expected_ok,
                exact_expected=exact_expected,
            )
        )
    return out
