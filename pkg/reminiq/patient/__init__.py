"""
Simulated PwD: transition model, default generator and qualitative checks.
"""

from .model import (
    DEFAULT_CHOICE_DISTRIBUTION,
    ModelStructureError,
    TransitionModel,
    load_model,
    sample_choice,
    sample_transition,
    save_model,
)
from .generator import PatientProfile, default_model
from .constraints import ConstraintCheck, ModelConstraintReport, validate_model

__all__ = [
    "DEFAULT_CHOICE_DISTRIBUTION",
    "ModelStructureError",
    "TransitionModel",
    "load_model",
    "sample_choice",
    "sample_transition",
    "save_model",
    "PatientProfile",
    "default_model",
    "ConstraintCheck",
    "ModelConstraintReport",
    "validate_model",
]
