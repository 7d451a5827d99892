"""Simulation and verification lab for limsup random fractals on [0,1].

Random dyadic selections (independent Bernoulli or blockwise uniform point
processes) meet deterministic Cantor targets; every closed-form quantity of
the models is computed exactly, and Monte Carlo truncations are checked
against those analytic oracles.
"""

from .cantor import (
    BlockTunedSchedule,
    CantorLevels,
    CantorSchedule,
    CantorTarget,
    DimensionEstimates,
    FullCubeTarget,
    Generation,
    IntervalTarget,
    SingletonTarget,
    TargetSet,
    block_tuned_packing_quotients,
    block_tuned_schedule,
    build_levels,
    covering_count,
    covering_count_bruteforce,
    dimension_sequences,
    floor_power_schedule,
    uniform_schedule,
)
from .correlation import (
    CorrelationReport,
    CovEstimate,
    cross_cov_negative_sweep,
    empirical_cov,
    exact_pp_cov,
    f_and_delta,
    pp_cross_cov,
    pp_joint_prob,
)
from .errors import FractalLabError
from .experiments import (
    BetaCoverageResult,
    BlockHitBound,
    BoxDimFit,
    CountingTrace,
    CoverCountStatistic,
    HitStatistics,
    WindowHitResult,
    WindowSpec,
    beta_coverage,
    block_expected_hits,
    box_dim_estimate,
    cover_count_statistic,
    hit_count_statistics,
    nested_counting,
    window_hit_probability,
)
from .grid import (
    CLOSED,
    HALF_OPEN,
    CubeIndex,
    RationalInterval,
    children,
    dyadic,
    enlarge_beta,
    level_cap,
    make_cube,
    min_distance,
    navigate,
    parent,
)
from .models import (
    BernoulliSpec,
    LevelSelection,
    PointProcessSpec,
    PowerBoundary,
    StaircaseBoundary,
    block_count,
    exact_hit_prob,
    hit_prob_log2,
    index_estimates,
    sample_level,
)

__version__ = "0.1.0"
