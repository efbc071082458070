"""Client SDK for the alpsim experiment service."""

from .client import ClientSession, PerformResult
from .duration import estimate_duration, looks_like_recipe
from .errors import (
    BudgetExceeded,
    BudgetMismatch,
    ClientError,
    NotFound,
    ParseRejected,
    SolverAborted,
    TransportError,
    ValidationRejected,
)
from .policies import (
    Policy,
    ReplayPolicy,
    SaturationSearchPolicy,
    extract_recipe,
    llm_hook,
    net_mass_change,
    run_policy,
)
from .transcript import TranscriptEntry, read_transcript, write_transcript

__version__ = "0.1.0"
