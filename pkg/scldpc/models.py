"""
scldpc Models - Pydantic models for ensembles, decoder runs, evolution results and configuration.
"""
from enum import Enum
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, model_validator


# Arrays travel as numpy inside the library and as nested lists in JSON.
NDArray = Annotated[
    np.ndarray,
    BeforeValidator(lambda v: v if v is None or isinstance(v, np.ndarray) else np.asarray(v)),
    PlainSerializer(lambda a: np.asarray(a).tolist(), return_type=list),
]


class ArrayModel(BaseModel):
    """Base for models that hold numpy arrays."""
    model_config = ConfigDict(arbitrary_types_allowed=True)


# =============================================================================
# ENSEMBLE MODELS
# =============================================================================

class EnsembleSpec(BaseModel):
    """An (l, r, L) spatially-coupled ensemble, stretched by w when w > 1."""
    model_config = ConfigDict(frozen=True)

    l: int = Field(ge=2, description="variable degree")
    r: int = Field(ge=2, description="check degree")
    L: int = Field(ge=1, description="chain length")
    M: int = Field(default=1000, ge=1, description="variables per position")
    w: int = Field(default=1, ge=1, description="stretch factor")

    @model_validator(mode="after")
    def _check_counts(self) -> "EnsembleSpec":
        if self.r < self.l:
            raise ValueError(f"check degree r={self.r} must be >= variable degree l={self.l}")
        # every position pattern repeats with period 2, so two positions suffice
        for u in (1, 2):
            sockets = len(self.incoming_blocks(u)) * self.M
            if sockets % self.r:
                raise ValueError(
                    f"{sockets} sockets at a position of parity {u % 2} are not divisible by r={self.r}; "
                    f"choose M so that l*M is a multiple of r (l={self.l}, M={self.M}, w={self.w})"
                )
        return self

    @property
    def D(self) -> int:
        """Number of check positions."""
        return self.L + self.w * (self.l - 1)

    @property
    def stretched(self) -> bool:
        return self.w > 1

    @property
    def label(self) -> str:
        base = f"({self.l},{self.r},{self.L})"
        return base if self.w == 1 else f"E{base[:-1]},{self.w})"

    def stride(self, i: int) -> int:
        """Edge stride of a variable at position i (1-based; odd positions stretch)."""
        return self.w if i % 2 == 1 else 1

    def check_positions(self, i: int) -> list[int]:
        """Check positions a variable at position i connects to, one edge each."""
        s = self.stride(i)
        return [i + k * s for k in range(self.l)]

    def incoming_blocks(self, u: int) -> list[tuple[int, int]]:
        """(variable position, edge index) pairs feeding check position u, over all integer positions."""
        blocks = []
        for k in range(self.l):
            for i in sorted({u - k * self.w, u - k}):
                if i + k * self.stride(i) == u:
                    blocks.append((i, k))
        return blocks

    def checks_at(self, u: int) -> int:
        """Number of check nodes at position u."""
        return len(self.incoming_blocks(u)) * self.M // self.r

    def with_M(self, M: int) -> "EnsembleSpec":
        return EnsembleSpec(**{**self.model_dump(), "M": M})


class ChannelSpec(BaseModel):
    """Binary erasure channel."""
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(ge=0.0, le=1.0)


class TannerGraph(ArrayModel):
    """A sampled code instance in flat-array form.

    Variables are numbered position-major: variable v sits at position v // M + 1.
    Checks are numbered position-major with `check_offsets[u-1]` the first check at u.
    """
    spec: EnsembleSpec
    seed: int
    var_checks: NDArray        # (L*M, l) check index of the k-th edge of each variable
    check_position: NDArray    # (n_checks,) 1-based position of each check
    check_offsets: NDArray     # (D+1,) first check index per position
    check_ptr: NDArray         # (n_checks+1,) CSR pointer into check_vars
    check_vars: NDArray        # variables adjacent to each check, CSR order

    @property
    def n_variables(self) -> int:
        return int(self.var_checks.shape[0])

    @property
    def n_checks(self) -> int:
        return int(self.check_position.shape[0])

    def variable_position(self, v: int) -> int:
        return v // self.spec.M + 1

    def check_degrees(self) -> np.ndarray:
        return np.diff(self.check_ptr)

    def edges_per_position(self) -> np.ndarray:
        """E_u of the full graph (no erasures)."""
        return np.bincount(self.check_position - 1, weights=self.check_degrees(), minlength=self.spec.D)


# =============================================================================
# PEELING MODELS
# =============================================================================

class DecodeStatus(str, Enum):
    """Terminal state of one peeling run."""
    DECODED = "decoded"
    STALLED = "stalled"


class FailurePhase(str, Enum):
    """Decoding phase a stall falls into."""
    INITIAL = "initial"
    STEADY = "steady"
    FINAL = "final"


class Trajectory(ArrayModel):
    """r1(tau) recorded along one peeling run."""
    tau: NDArray
    r1: NDArray
    r1_u: Optional[NDArray] = None
    v_u: Optional[NDArray] = None
    status: DecodeStatus
    tau_end: float
    remaining: int = 0
    seed: Optional[int] = None

    @property
    def decoded(self) -> bool:
        return self.status == DecodeStatus.DECODED


class MCResult(BaseModel):
    """Aggregated Monte Carlo block error estimate."""
    spec: EnsembleSpec
    epsilon: float
    trials: int
    failures: int
    p_b: float
    ci_low: float
    ci_high: float
    base_seed: int
    seeds: list[int] = Field(default_factory=list)
    stall_taus: list[float] = Field(default_factory=list)
    failure_phases: dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "MCResult":
        if not 0 <= self.failures <= self.trials:
            raise ValueError("failures must lie in [0, trials]")
        return self


# =============================================================================
# EVOLUTION MODELS
# =============================================================================

class DDState(ArrayModel):
    """Normalized degree distribution G(tau).

    `g[u-1, 0]` is v_u, `g[u-1, j]` is r_{j,u} for 1 <= j <= r.
    """
    spec: EnsembleSpec
    g: NDArray

    @property
    def v(self) -> np.ndarray:
        return self.g[:, 0]

    def r_j(self, j: int) -> np.ndarray:
        return self.g[:, j]

    @property
    def E(self) -> np.ndarray:
        return self.g[:, 1:].sum(axis=1)

    @property
    def r1(self) -> float:
        return float(self.g[:, 1].sum())

    def copy(self) -> "DDState":
        return DDState(spec=self.spec, g=self.g.copy())


class DriftContext(ArrayModel):
    """Removal-position pmf p, variable pmf lam[m, i], hit probabilities xi[m, u]
    and joint hit probabilities xi_joint[m, u, x] (0-based positions)."""
    p: NDArray
    lam: NDArray
    xi: NDArray
    xi_joint: NDArray


class MeanRun(ArrayModel):
    """One Euler integration of the mean evolution."""
    spec: EnsembleSpec
    epsilon: float
    dtau: float
    tau: NDArray
    r1: NDArray
    hit_zero: bool = False
    tau_hit_zero: Optional[float] = None
    decoded: bool = False
    remaining: float = 0.0
    stalled: bool = False
    clamp_events: int = 0
    profile_tau: Optional[NDArray] = None
    p_profile: Optional[NDArray] = None
    v_profile: Optional[NDArray] = None
    snapshots: dict[float, NDArray] = Field(default_factory=dict)

    @property
    def final_tau(self) -> float:
        return float(self.tau[-1])

    def r1_at(self, tau: float) -> float:
        return float(np.interp(tau, self.tau, self.r1))


class UncoupledFixedPoint(BaseModel):
    """Stall point of BP on the uncoupled (l, r)-regular ensemble."""
    l: int
    r: int
    epsilon: float
    x: float = 0.0
    beta: float = 0.0
    exists: bool = False


class WaveSpeed(BaseModel):
    """Decoding-wave coefficient c and the gamma it implies."""
    c: float
    beta: float
    gamma_from_speed: float
    iterations_per_position: Optional[float] = None


class CovState(ArrayModel):
    """M-scaled covariance of the flattened DD, coordinate (u, j) at index (u-1)*(r+1) + j."""
    spec: EnsembleSpec
    matrix: NDArray

    @property
    def delta1(self) -> float:
        return delta1_of(self.matrix, self.spec.r + 1)

    def block(self, u: int, x: int) -> np.ndarray:
        K = self.spec.r + 1
        return self.matrix[(u - 1) * K:u * K, (x - 1) * K:x * K]


def delta1_of(matrix: np.ndarray, K: int) -> float:
    """Sum of all degree-one covariance entries."""
    idx = np.arange(1, matrix.shape[0], K)
    return float(matrix[np.ix_(idx, idx)].sum())


class CovarianceRun(ArrayModel):
    """Co-integrated mean and covariance evolution."""
    spec: EnsembleSpec
    epsilon: float
    dtau: float
    tau: NDArray
    delta1: NDArray
    r1: Optional[NDArray] = None
    delta1_star: Optional[float] = None
    tau_star: Optional[float] = None
    min_eigenvalue: Optional[float] = None
    clamp_events: int = 0
    mean_state: Optional[NDArray] = None
    cov: Optional[NDArray] = None


class TemporalCovEstimate(ArrayModel):
    """phi_1(zeta, tau) on a tau grid plus the fitted decay rate."""
    zeta: float
    tau: NDArray
    phi: NDArray
    N: int
    theta: Optional[float] = None
    fit_window: tuple[float, float] = (0.05, 0.8)
    fit_residual: Optional[float] = None
    extinct: int = 0

    @property
    def phi_zeta(self) -> float:
        return float(np.interp(self.zeta, self.tau, self.phi))

    @property
    def normalized(self) -> np.ndarray:
        return self.phi / self.phi_zeta


# =============================================================================
# SCALING-LAW MODELS
# =============================================================================

class OUParams(BaseModel):
    """Ornstein-Uhlenbeck process dX = -aX dt + sqrt(2b) dW with absorbing level s."""
    a: float = Field(gt=0)
    b: float = Field(gt=0)
    s: float = Field(ge=0)
    omega: float = Field(default=1.0, gt=0)
    x0: float = 0.0

    @property
    def g(self) -> float:
        return float(np.exp(-self.a * self.omega))

    @property
    def stationary_variance(self) -> float:
        return self.b / self.a

    @property
    def C(self) -> float:
        """Boundary in stationary standard deviations."""
        return self.s / np.sqrt(self.b / self.a)


class ScalingParams(BaseModel):
    """Inputs of the scaling law for one ensemble."""
    l: int
    r: int
    L: int
    epsilon_th: float = Field(gt=0, lt=1)
    gamma: float = Field(gt=0)
    delta1_star: float = Field(gt=0)
    theta: float = Field(gt=0)
    tau_lb: float = Field(ge=0)
    reference_epsilon: Optional[float] = None

    @property
    def alpha(self) -> float:
        return self.gamma / np.sqrt(self.delta1_star)


class PredictionVariant(str, Enum):
    FULL = "full-sl"
    LOW_ERROR = "low-error"
    UPPER_BOUND = "upper-bound-mu0"


class PredictionCurve(BaseModel):
    """Predicted block error probability over an epsilon grid."""
    epsilon: list[float]
    p_b: list[float]
    variant: PredictionVariant
    L: int
    M: float
    m_sl: Optional[float] = None
    caveats: list[str] = Field(default_factory=list)


# =============================================================================
# CONFIGURATION MODELS
# =============================================================================

class IntegrationConfig(BaseModel):
    """Euler integration of the mean evolution."""
    dtau: float = Field(default=1e-3, gt=0)
    success_tolerance: float = 1e-6
    hit_zero: float = 1e-9
    e_floor: float = 1e-12
    instability_tolerance: float = 1e-2
    degree_one_fraction: float = Field(default=0.5, gt=0, le=1)
    max_halvings: int = 3
    stall_fraction: float = 1e-3
    threshold_tolerance: float = 1e-4


class SteadyConfig(BaseModel):
    """Operational steady-window rules."""
    half_width_fraction: float = 0.125
    flatness_tolerance: float = 1e-3
    delta1_relative_flatness: float = 0.05
    reference_offset: float = 0.04


class CovarianceConfig(BaseModel):
    """Covariance evolution switches."""
    boundary_cross_terms: bool = True
    printed_share_factor: bool = False
    psd_tolerance: float = 1e-6
    memory_guard: int = 5000


class TemporalConfig(BaseModel):
    """Gaussian-sampling temporal covariance estimator."""
    samples: int = Field(default=200, ge=2)
    fit_low: float = 0.05
    fit_high: float = 0.8
    horizon_factor: float = 8.0
    grid_step: float = 0.25
    non_psd_tolerance: float = 1e-3


class SimulationConfig(BaseModel):
    """Monte Carlo defaults."""
    trials: int = Field(default=1000, ge=1)
    base_seed: int = 2024
    workers: int = 1
    record_stride: Optional[int] = None


class CacheConfig(BaseModel):
    enabled: bool = True
    directory: str = ".scldpc/cache"


class LabConfig(BaseModel):
    """Complete scldpc configuration."""
    integration: IntegrationConfig = Field(default_factory=IntegrationConfig)
    steady: SteadyConfig = Field(default_factory=SteadyConfig)
    covariance: CovarianceConfig = Field(default_factory=CovarianceConfig)
    temporal: TemporalConfig = Field(default_factory=TemporalConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)
    cache: CacheConfig = Field(default_factory=CacheConfig)


class ExperimentConfig(BaseModel):
    """One CLI experiment: what to run and where to write it."""
    ensemble: EnsembleSpec
    epsilons: list[float] = Field(default_factory=list)
    M_values: list[int] = Field(default_factory=list)
    L_values: list[int] = Field(default_factory=list)
    trials: int = Field(default=1000, ge=1)
    seed: int = 2024
    workers: int = Field(default=1, ge=1)
    out_dir: str = "results"
    variant: PredictionVariant = PredictionVariant.FULL
    m_sl: Optional[float] = None
    scaling: Optional[ScalingParams] = None
    lab: LabConfig = Field(default_factory=LabConfig)


# =============================================================================
# REPRODUCTION MODELS
# =============================================================================

class ManifestRow(BaseModel):
    """One computed quantity checked against its published value."""
    quantity: str
    key: str
    computed: Optional[float] = None
    published: Optional[float] = None
    tolerance: Optional[float] = None
    note: str = ""

    @property
    def deviation(self) -> Optional[float]:
        if self.computed is None or self.published is None:
            return None
        return self.computed - self.published

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return True
        dev = self.deviation
        return dev is not None and abs(dev) <= self.tolerance


class Manifest(BaseModel):
    """Result of one reproduction target."""
    target: str
    rows: list[ManifestRow] = Field(default_factory=list)
    files: list[str] = Field(default_factory=list)
    version: str = ""

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)
