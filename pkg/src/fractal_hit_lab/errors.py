"""Exception types shared across the package.

Every error raised on a bad input or an exceeded resource bound derives
from FractalLabError so callers (and the CLI) can catch one base class.
"""


class FractalLabError(Exception):
    """Base class for all package errors."""


class CoordOutOfRange(FractalLabError):
    """Cube coordinate outside [0, 2^level - 1]."""


class NoParent(FractalLabError):
    """Parent requested for the level-0 root cube."""


class LevelMismatch(FractalLabError):
    """Operation requires two cubes of the same level."""


class UnsupportedDimension(FractalLabError):
    """Operation only defined in dimension 1 (or another fixed d)."""


class LevelCapExceeded(FractalLabError):
    """Requested dyadic level is above the configured cap."""


class CapacityError(FractalLabError):
    """Exact computation would materialize an integer too large to hold."""


class SearchOverflow(FractalLabError):
    """Integer schedule search exceeded its bound without success."""


class DegenerateGeneration(FractalLabError):
    """A Cantor generation would have fewer than 2 children."""


class DepthInsufficient(FractalLabError):
    """Target was built too shallow for the requested level range."""


class DegenerateInput(FractalLabError):
    """Regression input carries no usable data points."""


class InsufficientPrecision(FractalLabError):
    """Monte Carlo confidence radius too wide to decide a comparison."""


class SideConditionViolated(FractalLabError):
    """A counting-schedule side condition fails at some generation."""

    def __init__(self, generation: int, message: str):
        self.generation = generation
        super().__init__(f"generation {generation}: {message}")


class ConfigInvalid(FractalLabError):
    """Experiment configuration rejected; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
