"""
ScalingLab Core - finite-length analysis of spatially coupled LDPC codes on the BEC.

Usage:
    from scldpc import ScalingLab, EnsembleSpec

    # With default config
    lab = ScalingLab()
    spec = EnsembleSpec(l=3, r=6, L=50, M=1000)
    eps_th = lab.threshold(spec)
    params = lab.scaling_params(spec)
    curve = lab.predict(params, L=50, M=1000, epsilons=[0.42, 0.43, 0.44])

    # With custom config directory
    lab = ScalingLab(config_dir="/path/to/.scldpc")

    # Initialize config files
    ScalingLab.init_config()
"""
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Iterator, Optional, Sequence

from .exceptions import StageError
from .models import (
    ChannelSpec,
    CovarianceRun,
    EnsembleSpec,
    LabConfig,
    MCResult,
    MeanRun,
    PredictionCurve,
    PredictionVariant,
    ScalingParams,
    TannerGraph,
    TemporalCovEstimate,
    Trajectory,
)
from .util_deps.config import PACKAGE_VERSION
from .util_deps.covariance import delta1_star_param, integrate_covariance
from .util_deps.ensemble import sample_graph
from .util_deps.loader import ResultCache, cache_key, init_config_dir, load_lab_config
from .util_deps.mean_evolution import gamma_param, integrate_mean, tau_lb_or_none, threshold
from .util_deps.peeling import run_monte_carlo, simulate_trials
from .util_deps.scaling_law import predict_curve
from .util_deps.temporal import fit_theta, phi_estimator
from .util_deps.uncoupled import tau_lower_bound

logger = logging.getLogger(__name__)


class ScalingLab:
    """Configured entry point to every analysis stage, with a result cache."""

    def __init__(self, config_dir: Optional[str] = None, config_file: Optional[str] = None,
                 overrides: Optional[dict] = None):
        """Initialize with optional explicit config directory, file and overrides."""
        config_path = Path(config_dir) if config_dir else None
        self.config: LabConfig = load_lab_config(config_path, Path(config_file) if config_file else None, overrides)
        self.cache = ResultCache(self.config.cache.directory, self.config.cache.enabled)

    # ------------------------------------------------------------------
    # caching and stages
    # ------------------------------------------------------------------

    def _cached(self, namespace: str, payload: dict[str, Any], compute: Callable[[], dict]) -> dict:
        key = cache_key(namespace, payload, PACKAGE_VERSION)
        record = self.cache.get(key)
        if record is None:
            record = compute()
            self.cache.put(key, record)
        return record

    @staticmethod
    @contextmanager
    def _stage(name: str) -> Iterator[None]:
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            logger.debug("stage %s failed", name, exc_info=True)
            raise StageError(name, e) from e

    def _de_payload(self, spec: EnsembleSpec, **extra: Any) -> dict:
        # DE results do not depend on M
        return {
            "spec": spec.with_M(spec.r).model_dump(mode="json"),
            "integration": self.config.integration.model_dump(mode="json"),
            "steady": self.config.steady.model_dump(mode="json"),
            **extra,
        }

    # ------------------------------------------------------------------
    # ensemble and simulation
    # ------------------------------------------------------------------

    def sample_graph(self, spec: EnsembleSpec, seed: Optional[int] = None) -> TannerGraph:
        """Sample one Tanner graph of the ensemble."""
        return sample_graph(spec, self.config.simulation.base_seed if seed is None else seed)

    def simulate(self, spec: EnsembleSpec, epsilon: float, trials: Optional[int] = None,
                 seed: Optional[int] = None, workers: Optional[int] = None, progress: bool = False) -> MCResult:
        """Monte Carlo block error estimate of the peeling decoder."""
        sim = self.config.simulation
        return run_monte_carlo(
            spec, ChannelSpec(epsilon=epsilon), trials or sim.trials,
            sim.base_seed if seed is None else seed, workers or sim.workers,
            tau_lb=tau_lb_or_none(spec, epsilon), progress=progress,
        )

    def trajectories(self, spec: EnsembleSpec, epsilon: float, trials: int, seed: Optional[int] = None,
                     stride: Optional[int] = None, record_positions: bool = False,
                     workers: Optional[int] = None) -> list[Trajectory]:
        """Recorded r1(tau) trajectories of independent peeling runs."""
        sim = self.config.simulation
        return simulate_trials(
            spec, ChannelSpec(epsilon=epsilon), trials, sim.base_seed if seed is None else seed,
            workers or sim.workers, stride=stride or sim.record_stride, record_positions=record_positions,
        )

    # ------------------------------------------------------------------
    # evolution stages
    # ------------------------------------------------------------------

    def mean_evolution(self, spec: EnsembleSpec, epsilon: float, snapshot_taus: Sequence[float] = (),
                       stop_tau: Optional[float] = None) -> MeanRun:
        """Integrate the mean evolution at one epsilon."""
        return integrate_mean(spec, ChannelSpec(epsilon=epsilon), config=self.config.integration,
                              snapshot_taus=snapshot_taus, stop_tau=stop_tau)

    def threshold(self, spec: EnsembleSpec) -> float:
        """Mean-evolution threshold epsilon_(l,r,L)."""
        cfg = self.config.integration
        record = self._cached(
            "threshold", self._de_payload(spec),
            lambda: {"epsilon_th": threshold(spec, config=cfg)},
        )
        return record["epsilon_th"]

    def gamma(self, spec: EnsembleSpec, epsilon_th: Optional[float] = None,
              reference_epsilon: Optional[float] = None) -> tuple[float, float]:
        """(gamma, reference epsilon)."""
        eps_th = self.threshold(spec) if epsilon_th is None else epsilon_th

        def compute() -> dict:
            g, _, eps = gamma_param(spec, reference_epsilon, eps_th, self.config.integration, self.config.steady)
            return {"gamma": g, "reference_epsilon": eps}

        record = self._cached("gamma", self._de_payload(spec, eps_th=eps_th, eps=reference_epsilon), compute)
        return record["gamma"], record["reference_epsilon"]

    def covariance(self, spec: EnsembleSpec, epsilon: float, stop_tau: Optional[float] = None,
                   capture_tau: Optional[float] = None) -> CovarianceRun:
        """Co-integrate mean and covariance at one epsilon."""
        return integrate_covariance(spec, ChannelSpec(epsilon=epsilon), lab=self.config,
                                    capture_tau=capture_tau, stop_tau=stop_tau, allow_stretched=spec.stretched)

    def delta1_star(self, spec: EnsembleSpec, epsilon_th: Optional[float] = None,
                    reference_epsilon: Optional[float] = None) -> tuple[float, float]:
        """(delta1*, reference epsilon)."""
        if reference_epsilon is None:
            eps_th = self.threshold(spec) if epsilon_th is None else epsilon_th
            reference_epsilon = eps_th - self.config.steady.reference_offset

        def compute() -> dict:
            d1, eps = delta1_star_param(spec, reference_epsilon, lab=self.config)
            return {"delta1_star": d1, "reference_epsilon": eps}

        payload = self._de_payload(spec, eps=reference_epsilon,
                                   covariance=self.config.covariance.model_dump(mode="json"))
        record = self._cached("delta1_star", payload, compute)
        return record["delta1_star"], record["reference_epsilon"]

    def theta(self, spec: EnsembleSpec, reference_epsilon: Optional[float] = None, zeta: Optional[float] = None,
              N: Optional[int] = None, seed: Optional[int] = None) -> TemporalCovEstimate:
        """Temporal covariance estimate at the reference epsilon, with theta fitted."""
        if reference_epsilon is None:
            reference_epsilon = self.threshold(spec) - self.config.steady.reference_offset
        N = N or self.config.temporal.samples
        seed = self.config.simulation.base_seed if seed is None else seed

        def compute() -> dict:
            estimate = phi_estimator(spec, ChannelSpec(epsilon=reference_epsilon), zeta, None, N, seed, self.config)
            fit_theta(estimate)
            return estimate.model_dump(mode="json")

        payload = self._de_payload(
            spec, eps=reference_epsilon, zeta=zeta, N=N, seed=seed,
            covariance=self.config.covariance.model_dump(mode="json"),
            temporal=self.config.temporal.model_dump(mode="json"),
        )
        return TemporalCovEstimate.model_validate(self._cached("theta", payload, compute))

    def scaling_params(self, spec: EnsembleSpec, reference_epsilon: Optional[float] = None,
                       seed: Optional[int] = None) -> ScalingParams:
        """Every scaling-law parameter of the ensemble, stage by stage."""
        with self._stage("threshold"):
            eps_th = self.threshold(spec)
        with self._stage("gamma"):
            gamma, eps_ref = self.gamma(spec, eps_th, reference_epsilon)
        with self._stage("delta1_star"):
            delta1, _ = self.delta1_star(spec, eps_th, eps_ref)
        with self._stage("theta"):
            theta = self.theta(spec, eps_ref, seed=seed).theta
        with self._stage("tau_lb"):
            tau_lb = tau_lower_bound(spec.l, spec.r, spec.L, eps_th)

        params = ScalingParams(
            l=spec.l, r=spec.r, L=spec.L, epsilon_th=eps_th, gamma=gamma,
            delta1_star=delta1, theta=theta, tau_lb=tau_lb, reference_epsilon=eps_ref,
        )
        logger.info("%s scaling params: %s", spec.label, params.model_dump())
        return params

    def predict(self, params: ScalingParams, L: int, M: float, epsilons: Sequence[float],
                variant: PredictionVariant = PredictionVariant.FULL, m_sl: Optional[float] = None,
                tau_lb_mode: str = "epsilon") -> PredictionCurve:
        """Scaling-law block error curve."""
        return predict_curve(params, L, M, epsilons, variant, m_sl, tau_lb_mode)

    # ------------------------------------------------------------------
    # convenience
    # ------------------------------------------------------------------

    @classmethod
    def init_config(cls, path: Optional[str] = None) -> Path:
        """Initialize config directory with default files."""
        return init_config_dir(Path(path) if path else None)

    @classmethod
    def quick_threshold(cls, l: int, r: int, L: int) -> float:
        """Threshold with default config."""
        return cls().threshold(EnsembleSpec(l=l, r=r, L=L, M=r))

    @classmethod
    def quick_simulate(cls, l: int, r: int, L: int, M: int, epsilon: float, trials: int = 100) -> MCResult:
        """Monte Carlo estimate with default config."""
        return cls().simulate(EnsembleSpec(l=l, r=r, L=L, M=M), epsilon, trials)

    @classmethod
    def quick_scaling_params(cls, l: int, r: int, L: int) -> ScalingParams:
        """Scaling-law parameters with default config."""
        return cls().scaling_params(EnsembleSpec(l=l, r=r, L=L, M=r * 100))

    @classmethod
    def quick_predict(cls, params: ScalingParams, M: float, epsilons: Sequence[float]) -> PredictionCurve:
        """Full scaling-law curve at the chain length of `params`."""
        return predict_curve(params, params.L, M, epsilons)
