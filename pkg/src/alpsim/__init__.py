"""Virtual atomic-layer-processing reactor and discovery testbeds."""

from .config import (
    ReactorConfig,
    load_config,
    reference_config,
    validate_recipe_against_config,
)
from .recipe import Recipe, expand, format_recipe, parse_recipe, total_duration
from .solver import ReactorState, SolverOptions, run_recipe, run_segment, step
from .telemetry import TraceBundle, build_narrative, qcm_convert, sample

__version__ = "0.1.0"

__all__ = [
    "ReactorConfig",
    "ReactorState",
    "Recipe",
    "SolverOptions",
    "TraceBundle",
    "build_narrative",
    "expand",
    "format_recipe",
    "load_config",
    "parse_recipe",
    "qcm_convert",
    "reference_config",
    "run_recipe",
    "run_segment",
    "sample",
    "step",
    "total_duration",
    "validate_recipe_against_config",
]
