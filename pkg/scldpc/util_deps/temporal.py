"""
Temporal covariance of r1 in the steady phase, estimated by Gaussian sampling.

A DD state is drawn from N(G(zeta), delta(zeta)/M); the mean evolution run forward
from each draw gives E[r1(tau) | G(zeta)], and the sample covariance of r1(zeta)
with those conditional means estimates phi_1(zeta, tau). The decay rate theta
comes from a log-linear fit of the normalized covariance.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh

from ..exceptions import CovarianceNotPSDError, FitError
from ..models import ChannelSpec, EnsembleSpec, LabConfig, TemporalCovEstimate
from .covariance import integrate_covariance
from .ensemble import position_rng
from .mean_evolution import integrate_ensemble, integrate_mean, steady_window, tau_lb_or_none, threshold
from .peeling import empirical_temporal_covariance

logger = logging.getLogger(__name__)


def sample_dd_at(spec: EnsembleSpec, mean_state: np.ndarray, cov: np.ndarray, rng_seed: int,
                 size: int = 1, M: Optional[float] = None, non_psd_tolerance: float = 1e-3) -> np.ndarray:
    """Draw `size` DD states from N(mean_state, cov / M), shape (size, D, r+1)."""
    M = spec.M if M is None else M
    mean = np.asarray(mean_state, dtype=float)
    w, V = eigh(cov)
    trace = float(np.trace(cov))
    if w.min() < -non_psd_tolerance * max(trace, 1.0):
        raise CovarianceNotPSDError(
            f"covariance has eigenvalue {w.min():.3g} below -{non_psd_tolerance:g} x trace ({trace:.3g})"
        )
    factor = V * np.sqrt(np.clip(w, 0.0, None) / M)
    z = position_rng(rng_seed, 3).standard_normal((size, w.size))
    draws = mean.ravel()[None, :] + z @ factor.T
    neg = draws < 0
    if neg.any():
        logger.debug("clamped %d negative coordinates in %d Gaussian DD draws", neg.sum(), size)
        draws[neg] = 0.0
    return draws.reshape((size,) + mean.shape)


def _forward_edge(spec: EnsembleSpec, ch: ChannelSpec, lab: LabConfig) -> float:
    """Last tau of the steady phase used as the forward horizon limit."""
    tau_lb = tau_lb_or_none(spec, ch.epsilon)
    _, _, high = steady_window(spec, ch.epsilon, tau_lb, lab.steady)
    if tau_lb is None:
        return high
    return max(high, ch.epsilon * spec.L - tau_lb - 1.0)


def phi_estimator(spec: EnsembleSpec, ch: ChannelSpec, zeta: Optional[float] = None,
                  tau_grid: Optional[Sequence[float]] = None, N: Optional[int] = None,
                  rng_seed: int = 0, lab: Optional[LabConfig] = None, dtau: Optional[float] = None,
                  center: str = "sample") -> TemporalCovEstimate:
    """phi_1(zeta, tau) for tau >= zeta from N Gaussian draws at zeta.

    center="sample" subtracts the product of the sample means of r1(zeta) and
    E[r1(tau) | G(zeta)]; center="mean" subtracts the mean-evolution product.
    """
    lab = lab or LabConfig()
    tcfg = lab.temporal
    N = N or tcfg.samples
    if N < 2:
        raise ValueError(f"phi estimator needs N >= 2, got {N}")
    dtau = dtau or lab.integration.dtau
    if zeta is None:
        zeta = ch.epsilon * spec.L / 2.0

    if tau_grid is None:
        edge = _forward_edge(spec, ch, lab)
        if edge <= zeta:
            raise ValueError(f"zeta={zeta} lies beyond the steady phase (ends at {edge:.3f})")
        grid = zeta + np.arange(0.0, edge - zeta + 1e-12, tcfg.grid_step)
        pilot = True
    else:
        grid = np.sort(np.asarray(tau_grid, dtype=float))
        if grid.min() < zeta:
            raise ValueError("tau grid must start at or after zeta")
        pilot = False

    cov_run = integrate_covariance(spec, ch, dtau, lab, stop_tau=zeta, allow_stretched=spec.stretched)
    samples = sample_dd_at(spec, cov_run.mean_state, cov_run.cov, rng_seed, N,
                           non_psd_tolerance=tcfg.non_psd_tolerance)

    steps = int(math.ceil((grid.max() - zeta) / dtau))
    r1, extinct = integrate_ensemble(spec, samples, dtau, steps, lab.integration)
    if extinct.any():
        logger.warning("%s eps=%.4f: %d of %d forward integrations hit zero", spec.label, ch.epsilon, extinct.sum(), N)

    step_taus = zeta + dtau * np.arange(steps + 1)
    cond = np.array([np.interp(grid, step_taus, row) for row in r1])      # (N, len(grid))
    r1_zeta = r1[:, 0]
    if center == "sample":
        phi = (r1_zeta[:, None] * cond).mean(axis=0) - r1_zeta.mean() * cond.mean(axis=0)
    elif center == "mean":
        mean_run = integrate_mean(spec, ch, dtau, lab.integration, stop_tau=grid.max())
        mean_r1 = np.interp(grid, mean_run.tau, mean_run.r1)
        phi = (r1_zeta[:, None] * cond).mean(axis=0) - mean_run.r1_at(zeta) * mean_r1
    else:
        raise ValueError(f"center must be 'sample' or 'mean', got {center!r}")

    estimate = TemporalCovEstimate(
        zeta=zeta, tau=grid, phi=phi, N=N, fit_window=(tcfg.fit_low, tcfg.fit_high), extinct=int(extinct.sum()),
    )
    if pilot and len(grid) > 1 and estimate.phi_zeta > 0:
        ratio = phi[1] / estimate.phi_zeta
        if 0 < ratio < 1:
            theta_rough = -math.log(ratio) / (grid[1] - grid[0])
            keep = grid - zeta <= tcfg.horizon_factor / theta_rough
            estimate.tau, estimate.phi = grid[keep], phi[keep]
    return estimate


def fit_theta(estimate: TemporalCovEstimate, window: Optional[tuple[float, float]] = None) -> float:
    """Fit log(phi / phi(zeta, zeta)) = -theta |tau - zeta| + b inside the window."""
    low, high = window or estimate.fit_window
    phi0 = estimate.phi_zeta
    if phi0 <= 0:
        raise FitError(f"phi(zeta, zeta) = {phi0:.3g} is not positive")
    norm = estimate.normalized
    dist = np.abs(estimate.tau - estimate.zeta)
    mask = (norm >= low) & (norm <= high)
    if mask.sum() < 4:
        raise FitError(f"only {int(mask.sum())} grid points with normalized covariance in [{low}, {high}]")

    x, y = dist[mask], np.log(norm[mask])
    (slope, intercept), residuals, *_ = np.polyfit(x, y, 1, full=True)
    theta = -float(slope)
    if theta <= 0:
        raise FitError(f"normalized covariance does not decay (slope {slope:.3g})")
    estimate.theta = theta
    estimate.fit_window = (low, high)
    estimate.fit_residual = float(np.sqrt(residuals[0] / mask.sum())) if residuals.size else 0.0
    logger.info("theta=%.4f from %d points (rms %.2e)", theta, mask.sum(), estimate.fit_residual)
    return theta


def theta_from_trajectories(spec: EnsembleSpec, ch: ChannelSpec, trials: int, zeta: float,
                            seed: int = 0, tau_grid: Optional[Sequence[float]] = None,
                            parallelism: int = 1, window: tuple[float, float] = (0.05, 0.8)) -> TemporalCovEstimate:
    """theta from the empirical covariance of simulated r1 trajectories."""
    if tau_grid is None:
        tau_grid = zeta + np.arange(0.0, min(8.0, ch.epsilon * spec.L - zeta), 0.25)
    tau = np.asarray(tau_grid, dtype=float)
    phi = empirical_temporal_covariance(spec, ch, trials, [zeta], tau, seed, parallelism)[0]
    estimate = TemporalCovEstimate(zeta=zeta, tau=tau, phi=phi, N=trials, fit_window=window)
    fit_theta(estimate)
    return estimate


def theta_param(spec: EnsembleSpec, reference_epsilon: Optional[float] = None, zeta: Optional[float] = None,
                N: Optional[int] = None, rng_seed: int = 0, lab: Optional[LabConfig] = None,
                dtau: Optional[float] = None) -> TemporalCovEstimate:
    """Fitted estimate at the reference epsilon (default eps_th - 0.04), zeta at mid-window."""
    lab = lab or LabConfig()
    if reference_epsilon is None:
        reference_epsilon = threshold(spec, config=lab.integration) - lab.steady.reference_offset
    estimate = phi_estimator(spec, ChannelSpec(epsilon=reference_epsilon), zeta, None, N, rng_seed, lab, dtau)
    fit_theta(estimate)
    return estimate
