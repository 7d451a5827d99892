from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractal_hit_lab import cantor, grid
from fractal_hit_lab.errors import (
    DegenerateGeneration,
    SearchOverflow,
)


def test_generation_validation():
    with pytest.raises(DegenerateGeneration):
        cantor.Generation(1, Fraction(1, 4))
    with pytest.raises(ValueError):
        cantor.Generation(5, Fraction(1, 4))  # 5 children of 1/4 cannot fit


class TestBlockTunedSchedule:
    def test_worked_search(self):
        ts = [Fraction(2**k - 1, 2**k) for k in range(1, 4)]
        tuned = cantor.block_tuned_schedule(ts, 3, m1=2)
        assert tuned.n_seq[0] == 14  # smallest n with n*4*2^(-n/2) <= 1/2
        assert tuned.m_seq[0] == 2
        assert tuned.m_seq[1] == 10
        assert tuned.n_seq[1] == 67

    def test_tuning_inequalities_hold_verbatim(self):
        ts = [Fraction(2**k - 1, 2**k) for k in range(1, 5)]
        tuned = cantor.block_tuned_schedule(ts, 4, m1=2)
        m_sum = 0
        level = 0
        for k in range(1, 5):
            m_sum += tuned.m_seq[k - 1]
            level += tuned.n_seq[k - 1]
            t = tuned.t_seq[k - 1]
            # n_k N_k l_k 2^(M_k t_k) <= 2^-k, in log2 form
            import math

            lhs = math.log2(tuned.n_seq[k - 1]) + m_sum - level + float(level * t)
            assert lhs <= -k + 1e-9
            if k < 4:
                # 2^(m_(k+1)(1 - t_k)) N_k l_k^(t_k) >= 1
                m_next = tuned.m_seq[k]
                lhs2 = m_next * (1 - t) + m_sum - level * t
                assert lhs2 >= -Fraction(1, 10**9)

    def test_larger_t_never_decreases_n(self):
        results = []
        for t in (Fraction(1, 2), Fraction(7, 10), Fraction(9, 10)):
            tuned = cantor.block_tuned_schedule([t], 1, m1=2)
            results.append(tuned.n_seq[0])
        assert results == sorted(results)

    def test_search_overflow(self):
        with pytest.raises(SearchOverflow):
            cantor.block_tuned_schedule([Fraction(1, 2)], 1, m1=2, search_bound=10)

    def test_packing_quotients_dominate_t(self):
        ts = [Fraction(2**k - 1, 2**k) for k in range(1, 6)]
        tuned = cantor.block_tuned_schedule(ts, 5, m1=2)
        for p, t in zip(cantor.block_tuned_packing_quotients(tuned), tuned.t_seq):
            assert p >= t


class TestFloorPowerSchedule:
    def test_exact_power(self):
        s = cantor.floor_power_schedule(Fraction(1, 2), [4, 4, 4])
        assert all(g.count == 4 for g in s.generations)
        assert s.length(3) == Fraction(1, 2**12)

    def test_floor_of_non_integral_power(self):
        s = cantor.floor_power_schedule(Fraction(3, 10), [4])
        assert s.generations[0].count == 2  # floor(2^1.2) = 2

    def test_degenerate_generation(self):
        with pytest.raises(DegenerateGeneration):
            cantor.floor_power_schedule(Fraction(1, 10), [4])  # floor(2^0.4) = 1


class TestBuildLevels:
    def test_two_flush_children(self):
        lv = cantor.build_levels(cantor.uniform_schedule(2, Fraction(1, 4), 1))
        assert [(iv.left, iv.right) for iv in lv.generation(1)] == [
            (0, Fraction(1, 4)),
            (Fraction(3, 4), 1),
        ]

    def test_equal_spacing_four_children(self):
        s = cantor.floor_power_schedule(Fraction(1, 2), [4])
        lv = cantor.build_levels(s)
        assert [(iv.left, iv.right) for iv in lv.generation(1)] == [
            (0, Fraction(1, 16)),
            (Fraction(5, 16), Fraction(6, 16)),
            (Fraction(10, 16), Fraction(11, 16)),
            (Fraction(15, 16), 1),
        ]

    def test_nesting_and_counts(self):
        s = cantor.uniform_schedule(3, Fraction(1, 8), 3)
        lv = cantor.build_levels(s)
        for k in range(1, lv.depth + 1):
            gen = lv.generation(k)
            assert len(gen) == s.interval_count(k)
            parents = lv.generation(k - 1)
            for iv in gen:
                assert any(
                    p.left <= iv.left and iv.right <= p.right for p in parents
                )
            for a, b in zip(gen, gen[1:]):
                assert a.right <= b.left


def target_from(children, ratio, depth):
    return cantor.CantorTarget(
        cantor.build_levels(cantor.uniform_schedule(children, Fraction(ratio), depth))
    )


class TestTargets:
    def test_intersects_closure_semantics(self):
        tgt = target_from(2, "1/4", 1)  # {[0, 1/4], [3/4, 1]}
        assert tgt.intersects(grid.make_cube(2, [0], grid.CLOSED))
        assert not tgt.intersects(grid.make_cube(2, [1], grid.HALF_OPEN))
        assert tgt.intersects(grid.make_cube(2, [1], grid.CLOSED))

    def test_covering_count_examples(self):
        assert cantor.covering_count(cantor.FullCubeTarget(), 9) == 2**9
        tgt = target_from(4, "1/16", 2)
        assert cantor.covering_count(tgt, 8) == 16
        point = cantor.SingletonTarget(Fraction(0))
        assert all(cantor.covering_count(point, n) == 1 for n in range(0, 12))

    def test_singleton_at_right_edge_charged_to_last_cube(self):
        point = cantor.SingletonTarget(Fraction(1))
        assert point.covering_ranges(4) == [(15, 16)]

    def test_monotone_intersects(self):
        tgt = target_from(3, "1/8", 3)
        for k in range(0, 2**6):
            cube = grid.make_cube(6, [k], grid.HALF_OPEN)
            if tgt.intersects(cube):
                assert tgt.intersects(
                    grid.make_cube(5, [k // 2], grid.HALF_OPEN)
                )

    def test_covering_count_shallower_truncation_dominates(self):
        deep = target_from(2, "1/4", 4)
        shallow = target_from(2, "1/4", 3)
        for n in range(1, 9):
            assert shallow.covering_count(n) >= deep.covering_count(n)

    def test_interval_target(self):
        tgt = cantor.IntervalTarget(grid.RationalInterval(Fraction(1, 4), Fraction(1, 2)))
        assert tgt.covering_count(3) == 2
        assert tgt.intersects(grid.make_cube(3, [2], grid.HALF_OPEN))
        assert not tgt.intersects(grid.make_cube(3, [4], grid.HALF_OPEN))
        assert tgt.intersects(grid.make_cube(3, [4], grid.CLOSED))


RANDOM_SCHEDULES = [
    (2, Fraction(1, 4)),
    (2, Fraction(1, 8)),
    (3, Fraction(1, 8)),
    (3, Fraction(2, 7)),
    (4, Fraction(1, 16)),
    (4, Fraction(1, 5)),
    (5, Fraction(1, 8)),
    (6, Fraction(1, 9)),
]


@pytest.mark.parametrize("children,ratio", RANDOM_SCHEDULES)
def test_pruned_tree_equals_bruteforce(children, ratio):
    tgt = target_from(children, ratio, 2)
    for n in range(0, 11):
        assert cantor.covering_count(tgt, n) == cantor.covering_count_bruteforce(
            tgt, n
        )


def test_covering_lower_bound_tracks_dimension():
    # dimension-1/2 construction: counts stay >= 2^(n (1/2 - 0.05)) once the
    # generations are deep enough to resolve level n
    tgt = target_from(4, Fraction(1, 16), 6)
    for n in range(4, 20):
        assert tgt.covering_count(n) >= 2 ** (n * 0.45)


class TestDimensionSequences:
    def test_uniform_quarter_schedule_exact(self):
        s = cantor.uniform_schedule(4, Fraction(1, 16), 52)
        d = cantor.dimension_sequences(s, 50)
        for k in range(1, 51):
            assert d.hdim_seq_exact[k - 1] == Fraction(2 * (k + 1), 4 * k)
            assert d.pdim_seq_exact[k - 1] == Fraction(2 * (k + 1), 4 * k + 2)
        assert abs(d.hdim_limit_est - 0.5) < 0.02
        assert abs(d.pdim_limit_est - 0.5) < 0.02

    def test_floor_power_limit(self):
        s = cantor.floor_power_schedule(Fraction(1, 2), [4] * 51)
        d = cantor.dimension_sequences(s, 50)
        assert abs(d.hdim_limit_est - 0.5) < 0.02

    def test_window_recorded(self):
        s = cantor.uniform_schedule(2, Fraction(1, 4), 12)
        d = cantor.dimension_sequences(s, 10, window=4)
        assert d.window == 4
        assert min(d.hdim_seq[-4:]) == d.hdim_limit_est


@given(st.integers(2, 5), st.integers(2, 5), st.integers(1, 3))
@settings(max_examples=25, deadline=None)
def test_counts_and_lengths_consistent(children, inv_ratio_pow, depth):
    ratio = Fraction(1, 2**inv_ratio_pow)
    if children * ratio > 1:
        return
    s = cantor.uniform_schedule(children, ratio, depth)
    lv = cantor.build_levels(s)
    assert len(lv.generation(depth)) == children**depth
    for iv in lv.generation(depth):
        assert iv.width == ratio**depth
