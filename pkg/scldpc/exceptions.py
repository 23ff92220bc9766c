"""Exception hierarchy for scldpc."""


class ScldpcError(Exception):
    """Base class for every error raised by the library."""


class UnsupportedVariantError(ScldpcError):
    """A closed form exists only for the plain (w = 1) ensemble."""


class IntegrationError(ScldpcError):
    """Euler integration could not proceed."""


class StepTooLargeError(IntegrationError):
    """Negative mass beyond tolerance after an Euler step."""

    def __init__(self, dtau: float, tau: float, worst: float):
        self.dtau = dtau
        self.tau = tau
        self.worst = worst
        super().__init__(
            f"Euler step dtau={dtau:g} unstable at tau={tau:.4f} "
            f"(entry reached {worst:.3g}); retry with a smaller dtau"
        )


class DriftUndefinedError(IntegrationError):
    """The drift needs r1 > 0."""


class NoSteadyWindowError(ScldpcError):
    """Mean evolution has no usable steady phase."""


class CovarianceNotPSDError(ScldpcError):
    """Covariance too far from positive semidefinite to sample from."""


class FitError(ScldpcError):
    """Not enough points to fit the covariance decay."""


class ScalingLawDomainError(ScldpcError):
    """Scaling law evaluated outside its domain (e.g. above threshold)."""


class StageError(ScldpcError):
    """A pipeline stage failed; `stage` names it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


class UnknownTargetError(ScldpcError):
    """Reproduction id not recognized."""

    def __init__(self, target: str, available: list[str]):
        self.target = target
        self.available = available
        super().__init__(f"unknown target '{target}'; available: {', '.join(available)}")
