"""Reliability-verified generation expansion planning toolkit."""

from .errors import (
    InfeasibleError,
    MissingArtifactError,
    ParseError,
    RelgepError,
    ValidationError,
)
from .fleet import (
    GenerationMix,
    GeneratorType,
    HourlySeries,
    PlanningHorizon,
    dump_fleet,
    load_fleet,
    load_series,
    scale_demand,
)
from .adequacy import (
    AdequacyConfig,
    ReliabilityResult,
    available_capacity_derated,
    label_sample,
    simulate_lolh,
)

__version__ = "0.1.0"

__all__ = [
    "RelgepError",
    "ValidationError",
    "ParseError",
    "InfeasibleError",
    "MissingArtifactError",
    "GeneratorType",
    "HourlySeries",
    "GenerationMix",
    "PlanningHorizon",
    "load_fleet",
    "dump_fleet",
    "load_series",
    "scale_demand",
    "AdequacyConfig",
    "ReliabilityResult",
    "available_capacity_derated",
    "simulate_lolh",
    "label_sample",
    "__version__",
]
