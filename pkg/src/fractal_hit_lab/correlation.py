"""Selection covariances, the correlated-pair count f(n, eps), and the
finite-n growth exponent of f.

Both models are homogeneous and exchangeable under translation, so a
covariance depends only on whether the two cubes coincide, never on where
they sit: one self-pair evaluation plus one cross-pair evaluation decides
all 4^n pairs of a level.  f(n, eps) counts, for the worst cube Q, the
cubes Q' whose covariance with Q is at least eps P_n(Q) P_n(Q'); ties count
(the comparison is >=), and the comparison is exact rational arithmetic
whenever the model's probabilities are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from ._pow2 import MAX_EXACT_BITS
from .errors import (
    CapacityError,
    InsufficientPrecision,
    LevelMismatch,
    UnsupportedDimension,
)
from .grid import CubeIndex
from .models import (
    BernoulliSpec,
    PointProcessSpec,
    SelectionModel,
    exact_hit_prob,
    point_cube_indices,
)
from .rng import TAG_EMPIRICAL_COV, TRIAL_BLOCK, stream, trial_blocks


@dataclass(frozen=True)
class CovEstimate:
    """Covariance of Z_n(Q), Z_n(Q') with its provenance."""

    level: int
    pair: tuple[CubeIndex, CubeIndex]
    value: Fraction | float
    source: str  # "exact" | "monte_carlo"
    trials: int | None = None
    radius: float | None = None


def pp_joint_prob(n: int, count: int) -> Fraction:
    """P(both of two distinct closed cubes get a point), exactly.

    Distinct level-n cubes overlap in at most a face of measure zero, so
    inclusion-exclusion over the three regions (first cube only, second
    only, shared face) collapses to 1 - 2(1-2^-n)^C + (1-2*2^-n)^C.
    """
    if count == 0:
        return Fraction(0)
    if n * 2 * count > MAX_EXACT_BITS:
        raise CapacityError(f"exact joint needs {2 * n * count} bits")
    den = 1 << n
    q = Fraction(den - 1, den)
    s = Fraction(den - 2, den)
    return 1 - 2 * q**count + s**count


def pp_cross_cov(n: int, count: int) -> Fraction:
    """Cov(Z_n(Q), Z_n(Q')) for distinct cubes; equals s^C - q^(2C) < 0."""
    p = 1 - Fraction((1 << n) - 1, 1 << n) ** count if count else Fraction(0)
    return pp_joint_prob(n, count) - p * p


def exact_pp_cov(
    spec: PointProcessSpec, n: int, a: CubeIndex, b: CubeIndex
) -> CovEstimate:
    """Exact covariance for the point-process model (d = 1)."""
    if a.dim != 1 or b.dim != 1:
        raise UnsupportedDimension("point process is one-dimensional")
    if a.level != n or b.level != n:
        raise LevelMismatch(f"cubes must be at level {n}")
    c = spec.block_count(n)
    p = exact_hit_prob(spec, n)
    if a.coords == b.coords:
        value = p * (1 - p)
    else:
        value = pp_cross_cov(n, c)
    return CovEstimate(n, (a, b), value, "exact")


def cross_cov_negative_sweep(max_level: int, max_count: int) -> bool:
    """Exhaustively verify pp_cross_cov < 0 on 1 <= n <= max_level,
    1 <= C <= max_count, with exact integer arithmetic.

    Clearing denominators, cov(n, C) < 0 iff
    ((2^n - 2) 2^n)^C < ((2^n - 1)^2)^C; both sides are maintained
    incrementally in C, so the full sweep stays cheap.
    """
    for n in range(1, max_level + 1):
        den = 1 << n
        a = gmpy2.mpz(den - 2) * den
        b = gmpy2.mpz(den - 1) ** 2
        left = gmpy2.mpz(1)
        right = gmpy2.mpz(1)
        for _ in range(max_count):
            left *= a
            right *= b
            if left >= right:
                return False
    return True


def empirical_cov(
    spec: SelectionModel,
    n: int,
    pairs: Sequence[tuple[CubeIndex, CubeIndex]],
    trials: int,
    seed: int,
) -> list[CovEstimate]:
    """Sample covariance over `trials` independent level selections.

    The confidence radius is 3 sd/sqrt(T) of the centered cross products.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    cubes = sorted({c.coords[0] for p in pairs for c in p})
    pos = {k: i for i, k in enumerate(cubes)}
    cube_arr = np.array(cubes, dtype=np.int64)
    indicators = np.zeros((trials, len(cubes)), dtype=bool)
    for start, count, rng in trial_blocks(trials, seed, TAG_EMPIRICAL_COV):
        if isinstance(spec, BernoulliSpec):
            p = float(spec.prob(n))
            draws = rng.random((TRIAL_BLOCK, len(cubes))) < p
            indicators[start : start + count] = draws[:count]
        else:
            c = spec.block_count(n)
            pts = rng.random((TRIAL_BLOCK, c))[:count]
            scaled = pts * float(1 << n)
            idx = np.floor(scaled).astype(np.int64)
            ind = (idx[:, None, :] == cube_arr[None, :, None]).any(axis=2)
            face = (scaled == idx) & (idx > 0)
            if face.any():
                # a point on a grid face also marks the closed cube on its left
                extra = np.where(face, idx - 1, np.int64(-1))
                ind |= (extra[:, None, :] == cube_arr[None, :, None]).any(axis=2)
            indicators[start : start + count] = ind
    out = []
    for a, b in pairs:
        za = indicators[:, pos[a.coords[0]]].astype(float)
        zb = indicators[:, pos[b.coords[0]]].astype(float)
        prod = (za - za.mean()) * (zb - zb.mean())
        est = prod.sum() / (trials - 1)
        radius = 3.0 * prod.std(ddof=1) / math.sqrt(trials)
        out.append(CovEstimate(n, (a, b), est, "monte_carlo", trials, radius))
    return out


@dataclass(frozen=True)
class CorrelationReport:
    """f(n, eps) per level plus the tail growth-exponent estimate."""

    epsilon: Fraction
    levels: tuple[int, ...]
    f_values: tuple[int, ...]
    delta_seq: tuple[float, ...]
    delta_est: float
    tail_window: int
    source: str


def f_and_delta(
    spec: SelectionModel,
    levels: Sequence[int],
    epsilon,
    tail_window: int | None = None,
) -> CorrelationReport:
    """Correlated-pair counts and the finite-horizon exponent estimate.

    Exploits translation invariance: per level only the self pair and one
    cross pair are evaluated, covering all positions.  Degenerate levels
    with P_n = 0 report f = 2^n since every covariance ties at 0.
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be > 0")
    levels = tuple(int(n) for n in levels)
    fs: list[int] = []
    deltas: list[float] = []
    for n in levels:
        total = 1 << n
        p = exact_hit_prob(spec, n)
        if p == 0:
            f = total  # Cov = 0 = eps P^2 for every pair; ties qualify
        else:
            threshold = eps * p * p
            f = 1 if p * (1 - p) >= threshold else 0
            if isinstance(spec, BernoulliSpec):
                cross = Fraction(0)
            else:
                cross = pp_cross_cov(n, spec.block_count(n))
            if cross >= threshold:
                f += total - 1
        fs.append(f)
        deltas.append(math.log2(f) / n if f > 0 else -math.inf)
    window = tail_window if tail_window is not None else max(1, len(levels) // 2)
    return CorrelationReport(
        epsilon=eps,
        levels=levels,
        f_values=tuple(fs),
        delta_seq=tuple(deltas),
        delta_est=max(deltas[-window:]),
        tail_window=window,
        source="exact",
    )
