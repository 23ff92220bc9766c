"""
scldpc - Finite-length scaling of spatially coupled LDPC codes over the BEC.

Usage:
    from scldpc import ScalingLab, EnsembleSpec

    # Quick threshold and parameters
    eps_th = ScalingLab.quick_threshold(3, 6, 50)
    params = ScalingLab.quick_scaling_params(3, 6, 100)

    # With config
    lab = ScalingLab(config_dir=".scldpc")
    result = lab.simulate(EnsembleSpec(l=3, r=6, L=50, M=500), epsilon=0.44, trials=1000)

    # Initialize config files
    ScalingLab.init_config()
"""
from .core import ScalingLab
from .exceptions import (
    ScldpcError,
    UnsupportedVariantError,
    IntegrationError,
    StepTooLargeError,
    DriftUndefinedError,
    NoSteadyWindowError,
    CovarianceNotPSDError,
    FitError,
    ScalingLawDomainError,
    StageError,
    UnknownTargetError,
)
from .models import (
    EnsembleSpec,
    ChannelSpec,
    TannerGraph,
    DecodeStatus,
    FailurePhase,
    Trajectory,
    MCResult,
    DDState,
    MeanRun,
    UncoupledFixedPoint,
    WaveSpeed,
    CovState,
    CovarianceRun,
    TemporalCovEstimate,
    OUParams,
    ScalingParams,
    PredictionVariant,
    PredictionCurve,
    LabConfig,
    ExperimentConfig,
    Manifest,
    ManifestRow,
)
from .util_deps.config import PACKAGE_VERSION

__version__ = PACKAGE_VERSION
__all__ = [
    "ScalingLab",
    "ScldpcError",
    "UnsupportedVariantError",
    "IntegrationError",
    "StepTooLargeError",
    "DriftUndefinedError",
    "NoSteadyWindowError",
    "CovarianceNotPSDError",
    "FitError",
    "ScalingLawDomainError",
    "StageError",
    "UnknownTargetError",
    "EnsembleSpec",
    "ChannelSpec",
    "TannerGraph",
    "DecodeStatus",
    "FailurePhase",
    "Trajectory",
    "MCResult",
    "DDState",
    "MeanRun",
    "UncoupledFixedPoint",
    "WaveSpeed",
    "CovState",
    "CovarianceRun",
    "TemporalCovEstimate",
    "OUParams",
    "ScalingParams",
    "PredictionVariant",
    "PredictionCurve",
    "LabConfig",
    "ExperimentConfig",
    "Manifest",
    "ManifestRow",
]
