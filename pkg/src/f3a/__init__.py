"""Prompt-conditioned visual-token routing under an exact token budget."""
from .baselines import PRUNER_KINDS, run_pruner
from .cues import PromptSpec, build_cues
from .embedding import EmbeddingProvider
from .harness import (
    BatteryConfig,
    RetentionCurve,
    generate_task,
    run_battery,
    sign_test,
    token_demand,
)
from .kernels import BACKEND
from .model import (
    Budget,
    Cue,
    CueSet,
    HyperParams,
    InvalidArgument,
    Rng,
    SelectionTrace,
    TokenGrid,
    make_budget,
)
from .search import select
from .sensing import build_bank, odor_field

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BatteryConfig",
    "Budget",
    "Cue",
    "CueSet",
    "EmbeddingProvider",
    "HyperParams",
    "InvalidArgument",
    "PRUNER_KINDS",
    "PromptSpec",
    "RetentionCurve",
    "Rng",
    "SelectionTrace",
    "TokenGrid",
    "build_bank",
    "build_cues",
    "generate_task",
    "make_budget",
    "odor_field",
    "run_battery",
    "run_pruner",
    "select",
    "sign_test",
    "token_demand",
]
