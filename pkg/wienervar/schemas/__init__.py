from .estimate import ANormSq, Estimate
from .drift import DriftFamily
from .optimizer import OptimizerConfig, QuadConfig
from .experiment import EXPERIMENT_KINDS, ExperimentConfig
from .record import CheckResult, EstimateRow, RunRecord, SuiteRow, SuiteSummary

__all__ = [
    "Estimate", "ANormSq",
    "DriftFamily",
    "OptimizerConfig", "QuadConfig",
    "ExperimentConfig", "EXPERIMENT_KINDS",
    "RunRecord", "CheckResult", "EstimateRow", "SuiteRow", "SuiteSummary",
]
