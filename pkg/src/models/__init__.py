"""
Data models shared by the services, routes and CLI.

The privacy and inference models are plain dataclasses with to_dict /
from_dict helpers; the experiment configs are pydantic models.
"""

# Import all models for easy access
from .privacy import (
    CompositionLimit,
    DPParameters,
    Functionals,
    GaussianMechanismSpec,
    InclusionProbabilities,
    MixtureWeights,
    PrivacyBudget,
    TradeoffCurve,
)
from .inference import (
    BagVotes,
    BLBConfig,
    BootstrapConfig,
    BootstrapDraws,
    ConfidenceInterval,
    EstimatorSpec,
    Sample,
)
from .experiment import CliConfig, ExperimentConfig, ReportRow

__all__ = [
    'BagVotes',
    'BLBConfig',
    'BootstrapConfig',
    'BootstrapDraws',
    'CliConfig',
    'CompositionLimit',
    'ConfidenceInterval',
    'DPParameters',
    'EstimatorSpec',
    'ExperimentConfig',
    'Functionals',
    'GaussianMechanismSpec',
    'InclusionProbabilities',
    'MixtureWeights',
    'PrivacyBudget',
    'ReportRow',
    'Sample',
    'TradeoffCurve',
]
