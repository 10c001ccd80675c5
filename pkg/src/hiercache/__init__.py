"""Simulator for two coded-placement schemes in two-layer hierarchical coded caching."""

from .errors import (
    ConfigurationError,
    DemandError,
    HierCacheError,
    InputError,
    IntegrityError,
)
from .gf import GF, FieldElement, choose_prime
from .harness import (
    EpisodeReport,
    SweepReport,
    decodability_oracle,
    golden_trace,
    run_episode,
    sweep,
)
from .model import (
    DemandStats,
    FileLibrary,
    Subfile,
    SystemConfig,
    demand_stats,
    random_library,
    subpacketize,
    validate_demand,
)
from .rates import RateReport, formula_report

__version__ = "0.1.0"
