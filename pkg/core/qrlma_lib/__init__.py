# flake8: ignore=F401

from .fixtures import list_presets, load_preset
from .forecast import lma_predict, ode_solve, stiffness_report
from .gillespie import simulate_dataset, simulate_ssa
from .infer import FitConfig, lla_estimate, lma_fit
from .model_select import CandidateLibrary, stepwise_search
from .reaction import ReactionSystem, hazard, hazard_jacobian, lma_coefficients
from .types import ObservationSet
from .uncertainty import predict_sensitivity, stderr

__all__ = [
    "CandidateLibrary",
    "FitConfig",
    "ObservationSet",
    "ReactionSystem",
    "hazard",
    "hazard_jacobian",
    "list_presets",
    "lla_estimate",
    "lma_coefficients",
    "lma_fit",
    "lma_predict",
    "load_preset",
    "ode_solve",
    "predict_sensitivity",
    "simulate_dataset",
    "simulate_ssa",
    "stepwise_search",
    "stderr",
    "stiffness_report",
]
