"""Discrete-time model reference adaptive control driven by online data informativity."""

from .adaptive_controller import (AdaptiveController, ControllerConfig, DataBuffers,
                                  ExplorationError, Mode, ThetaState)
from .informativity import (InformativeTimeTracker, InformativityError, RankTolerance,
                            Trajectory, gains_from_data, informative_for_mrc,
                            informative_for_sysid, is_pe, numeric_rank)
from .lti_models import (ConfigurationError, DimensionError, GainPair, ReferenceModel,
                         StateSpacePlant, matching_residual, matching_solvable)
from .sim_harness import (ConstantReference, NormalReference, RunReport, Scenario,
                          SimulationError, StepRecord, Verdict, run)

__all__ = [
    "AdaptiveController", "ControllerConfig", "DataBuffers", "ExplorationError", "Mode",
    "ThetaState", "InformativeTimeTracker", "InformativityError", "RankTolerance",
    "Trajectory", "gains_from_data", "informative_for_mrc", "informative_for_sysid",
    "is_pe", "numeric_rank", "ConfigurationError", "DimensionError", "GainPair",
    "ReferenceModel", "StateSpacePlant", "matching_residual", "matching_solvable",
    "ConstantReference", "NormalReference", "RunReport", "Scenario", "SimulationError",
    "StepRecord", "Verdict", "run",
]
