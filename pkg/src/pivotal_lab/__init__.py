"""Noise stability, pivotal sets, and volatility of tribes-built functions.

The package splits into an exact enumeration engine (exact), stream-seeded
Monte Carlo estimators (montecarlo), continuous-time hypercube dynamics
(dynamics), and the function families themselves (constructions), all on a
small packed-configuration core.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    BOOLEAN,
    TERNARY,
    ZERO_ONE,
    Configuration,
    EvaluableFunction,
    Permutation,
    TableFunction,
    apply_noise,
    check_invariance,
    check_monotone,
    pivotal_set,
    sample_configuration,
)
from .constructions import (  # noqa: F401
    Bribed,
    BribableTribes,
    Majority,
    PivotalThreshold,
    ScheduleEntry,
    Tribes,
    TribesParams,
    bribable,
    bribed,
    from_descriptor,
    pivotal_threshold,
    schedule,
    tribes,
    tribes_generators,
)
from .errors import ExhaustiveCapError, UsageError  # noqa: F401
from .montecarlo import Estimate  # noqa: F401
from .rng import RandomStream  # noqa: F401
