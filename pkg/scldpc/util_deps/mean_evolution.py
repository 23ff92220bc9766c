"""
Mean evolution - degree-distribution drift, Euler integration, thresholds and gamma.

The state is a (D, r+1) array: column 0 holds v_u, column j holds r_{j,u}.
All drift helpers accept leading batch dimensions, so a stack of states (or of
tangent directions) is evaluated with one set of matrix products.
"""
import logging
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binom

from ..exceptions import DriftUndefinedError, NoSteadyWindowError, StepTooLargeError
from ..models import (
    ChannelSpec, DDState, DriftContext, EnsembleSpec, IntegrationConfig, MeanRun, SteadyConfig,
)
from .config import DEFAULT_REFERENCE_OFFSET
from .ensemble import degree_pmfs
from .uncoupled import binsearch, stall_fixed_point

logger = logging.getLogger(__name__)

_TINY = 1e-300


@lru_cache(maxsize=64)
def incidence(spec: EnsembleSpec) -> np.ndarray:
    """(L, D) count of edges from a variable at position i to check position u."""
    H = np.zeros((spec.L, spec.D))
    for i in range(1, spec.L + 1):
        for u in spec.check_positions(i):
            H[i - 1, u - 1] += 1
    H.setflags(write=False)
    return H


def initial_mean(spec: EnsembleSpec, ch: ChannelSpec) -> DDState:
    """Expected normalized DD right after transmission."""
    eps = ch.epsilon
    r = spec.r
    rho = degree_pmfs(spec)                       # (D, r+1) over original degree m
    n_blocks = np.array([len(spec.incoming_blocks(u)) for u in range(1, spec.D + 1)])
    j = np.arange(r + 1)
    # B[m, j] = P(j of m edges erased)
    B = binom.pmf(j[None, :], j[:, None], eps)
    g = np.zeros((spec.D, r + 1))
    g[:, 1:] = (n_blocks[:, None] / r) * j[None, 1:] * (rho @ B)[:, 1:]
    g[:spec.L, 0] = eps
    return DDState(spec=spec, g=g)


# =============================================================================
# DRIFT
# =============================================================================

class DriftTerms:
    """Intermediate quantities of the drift at a (batched) state."""

    def __init__(self, g: np.ndarray, H: np.ndarray, e_floor: float):
        L = H.shape[0]
        r = g.shape[-1] - 1
        self.H = H
        self.e_floor = e_floor
        self.jvec = np.arange(1, r + 1, dtype=float)

        self.v = g[..., :L, 0]
        self.rj = g[..., 1:]
        self.r1_pos = g[..., 1]
        self.r1 = self.r1_pos.sum(axis=-1)
        if np.any(self.r1 <= 0):
            raise DriftUndefinedError("drift needs r1 > 0")

        self.p = self.r1_pos / self.r1[..., None]
        self.N = self.v @ H
        self.live_N = self.N > _TINY
        self.q = np.where(self.live_N, self.p / np.where(self.live_N, self.N, 1.0), 0.0)
        self.s = self.q @ H.T
        self.gi = self.v * self.s
        self.c = self.gi @ H - self.p

        self.E = self.rj.sum(axis=-1)
        self.live_E = self.E > e_floor
        self.E_safe = np.where(self.live_E, self.E, 1.0)
        r_next = np.concatenate([self.rj[..., 1:], np.zeros_like(self.rj[..., :1])], axis=-1)
        mu = self.jvec * (r_next - self.rj) / self.E_safe[..., None]
        self.mu = np.where(self.live_E[..., None], mu, 0.0)

    def value(self) -> np.ndarray:
        L = self.H.shape[0]
        fR = self.mu * self.c[..., None]
        fR[..., 0] -= self.p
        f = np.zeros(fR.shape[:-1] + (fR.shape[-1] + 1,))
        f[..., 1:] = fR
        f[..., :L, 0] = -self.gi
        return f

    def jvp(self, dg: np.ndarray) -> np.ndarray:
        H = self.H
        L = H.shape[0]
        dv = dg[..., :L, 0]
        dr = dg[..., 1:]

        dE = dr.sum(axis=-1)
        dr1_pos = dr[..., 0]
        dr1 = dr1_pos.sum(axis=-1)
        dp = (dr1_pos - self.p * dr1[..., None]) / self.r1[..., None]
        dN = dv @ H
        N_safe = np.where(self.live_N, self.N, 1.0)
        dq = np.where(self.live_N, (dp - self.q * dN) / N_safe, 0.0)
        ds = dq @ H.T
        dgi = dv * self.s + self.v * ds
        dc = dgi @ H - dp

        dr_next = np.concatenate([dr[..., 1:], np.zeros_like(dr[..., :1])], axis=-1)
        dmu = (self.jvec * (dr_next - dr) - self.mu * dE[..., None]) / self.E_safe[..., None]
        dmu = np.where(self.live_E[..., None], dmu, 0.0)

        dfR = dmu * self.c[..., None] + self.mu * dc[..., None]
        dfR[..., 0] -= dp
        df = np.zeros(dfR.shape[:-1] + (dfR.shape[-1] + 1,))
        df[..., 1:] = dfR
        df[..., :L, 0] = -dgi
        return df


def drift(state: DDState | np.ndarray, spec: Optional[EnsembleSpec] = None,
          e_floor: float = 1e-12) -> np.ndarray:
    """Expected change of the normalized DD per removed variable (per unit tau)."""
    g, spec = _unpack(state, spec)
    return DriftTerms(g, incidence(spec), e_floor).value()


def drift_jvp(state: DDState | np.ndarray, direction: np.ndarray,
              spec: Optional[EnsembleSpec] = None, e_floor: float = 1e-12) -> np.ndarray:
    """Directional derivative of the drift; `direction` may carry extra leading axes."""
    g, spec = _unpack(state, spec)
    return DriftTerms(g, incidence(spec), e_floor).jvp(direction)


def jacobian(state: DDState) -> np.ndarray:
    """Full (n, n) drift Jacobian in flattened coordinates, n = D (r+1)."""
    n = state.g.size
    dirs = np.eye(n).reshape((n,) + state.g.shape)
    return drift_jvp(state, dirs).reshape(n, n).T


def jacobian_fd(state: DDState, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian."""
    n = state.g.size
    dirs = np.eye(n).reshape((n,) + state.g.shape)
    plus = drift(state.g + h * dirs, state.spec)
    minus = drift(state.g - h * dirs, state.spec)
    return ((plus - minus) / (2 * h)).reshape(n, n).T


def drift_context(state: DDState) -> DriftContext:
    """p, lam, xi and the joint hits xi_joint at a DD state."""
    spec = state.spec
    H = incidence(spec)
    t = DriftTerms(state.g, H, 1e-12)
    weights = t.v[:, None] * H                    # (L, D): v_i h_im
    lam = np.where(t.live_N[None, :], weights / np.where(t.live_N, t.N, 1.0)[None, :], 0.0).T
    xi = np.clip(lam @ H, 0.0, 1.0)
    xi_joint = np.clip(np.einsum("mi,iu,ix->mux", lam, H, H), 0.0, 1.0)
    return DriftContext(p=t.p, lam=lam, xi=xi, xi_joint=xi_joint)


def position_profile(state: DDState) -> tuple[np.ndarray, np.ndarray]:
    """(p_u, v_u): degree-one removal pmf over check positions and the variable profile."""
    r1 = state.g[:, 1].sum()
    if r1 <= 0:
        raise DriftUndefinedError("p_u needs r1 > 0")
    return state.g[:, 1] / r1, state.g[:state.spec.L, 0].copy()


def _unpack(state, spec):
    if isinstance(state, DDState):
        return state.g, state.spec
    if spec is None:
        raise ValueError("a raw state array needs its EnsembleSpec")
    return np.asarray(state, dtype=float), spec


# =============================================================================
# INTEGRATION
# =============================================================================

def euler_step(g: np.ndarray, f: np.ndarray, dtau: float, tau: float,
               cfg: IntegrationConfig) -> tuple[np.ndarray, int, float]:
    """g + dtau f with small negative entries clamped to 0.

    Returns (state, clamp count, r1 before clamping). Clamping that would put
    back more than `instability_tolerance` of the degree-one mass is an
    unstable step.
    """
    g = g + dtau * f
    raw_r1 = float(g[:, 1].sum())
    worst = g.min()
    if worst >= 0:
        return g, 0, raw_r1
    if worst < -cfg.instability_tolerance:
        raise StepTooLargeError(dtau, tau, float(worst))
    col = g[:, 1]
    restored = -float(col[col < 0].sum())
    if raw_r1 >= cfg.hit_zero and restored > cfg.instability_tolerance * raw_r1:
        raise StepTooLargeError(dtau, tau, -restored)
    neg = g < 0
    logger.debug("clamped %d negative entries at tau=%.4f (min %.2e)", neg.sum(), tau, worst)
    g[neg] = 0.0
    return g, int(neg.sum()), raw_r1


def degree_one_step(g: np.ndarray, f: np.ndarray, dtau: float, tau: float,
                    cfg: IntegrationConfig) -> tuple[np.ndarray, int, float, float]:
    """Euler step of length h = min(dtau, degree_one_fraction * r1).

    The step is halved locally while clamping would restore degree-one mass.
    Returns (state, clamp count, unclamped r1, h).
    """
    h = min(dtau, cfg.degree_one_fraction * float(g[:, 1].sum()))
    for attempt in range(cfg.max_halvings + 1):
        try:
            g_next, clamps, raw_r1 = euler_step(g, f, h, tau + h, cfg)
        except StepTooLargeError:
            if attempt == cfg.max_halvings:
                raise
            h /= 2
            continue
        return g_next, clamps, raw_r1, h
    raise AssertionError("unreachable")


def _euler_run(spec: EnsembleSpec, ch: ChannelSpec, dtau: float, cfg: IntegrationConfig,
               snapshot_taus: Sequence[float], stop_tau: Optional[float]) -> MeanRun:
    H = incidence(spec)
    g = initial_mean(spec, ch).g
    eps_L = ch.epsilon * spec.L
    tau = 0.0
    taus, r1s = [0.0], [float(g[:, 1].sum())]
    targets = sorted(snapshot_taus)
    snapshots: dict[float, np.ndarray] = {}
    clamps = 0
    hit_zero = decoded = False
    tau_hit = None

    while True:
        while targets and tau >= targets[0] - dtau / 2:
            snapshots[targets.pop(0)] = g.copy()
        if g[:spec.L, 0].sum() <= cfg.success_tolerance:
            decoded = True
            break
        if r1s[-1] < cfg.hit_zero:
            hit_zero, tau_hit = True, tau
            break
        if stop_tau is not None and tau >= stop_tau:
            break

        g, clamped, raw_r1, h = degree_one_step(g, DriftTerms(g, H, cfg.e_floor).value(), dtau, tau, cfg)
        tau += h
        clamps += clamped
        taus.append(tau)
        # degree-one mass that only survives through clamping counts as exhausted
        r1s.append(0.0 if raw_r1 < cfg.hit_zero else float(g[:, 1].sum()))

    remaining = float(g[:spec.L, 0].sum())
    stalled = hit_zero and remaining > cfg.stall_fraction * eps_L
    run = MeanRun(
        spec=spec, epsilon=ch.epsilon, dtau=dtau,
        tau=np.asarray(taus), r1=np.asarray(r1s),
        hit_zero=hit_zero, tau_hit_zero=tau_hit, decoded=decoded,
        remaining=remaining, stalled=stalled, clamp_events=clamps,
        snapshots=snapshots,
    )
    if snapshots:
        keys = sorted(snapshots)
        run.profile_tau = np.asarray(keys)
        p_rows = []
        for k in keys:
            r1 = snapshots[k][:, 1].sum()
            p_rows.append(snapshots[k][:, 1] / r1 if r1 > 0 else np.zeros(spec.D))
        run.p_profile = np.asarray(p_rows)
        run.v_profile = np.asarray([snapshots[k][:spec.L, 0] for k in keys])
    return run


def integrate_mean(spec: EnsembleSpec, ch: ChannelSpec, dtau: Optional[float] = None,
                   config: Optional[IntegrationConfig] = None,
                   snapshot_taus: Sequence[float] = (), stop_tau: Optional[float] = None) -> MeanRun:
    """Explicit Euler from initial_mean until success, hit-zero or stop_tau.

    An unstable step halves dtau up to `config.max_halvings` times before
    StepTooLargeError propagates.
    """
    cfg = config or IntegrationConfig()
    dtau = dtau or cfg.dtau
    if dtau <= 0:
        raise ValueError(f"dtau must be positive, got {dtau}")
    for attempt in range(cfg.max_halvings + 1):
        try:
            run = _euler_run(spec, ch, dtau, cfg, snapshot_taus, stop_tau)
        except StepTooLargeError as e:
            if attempt == cfg.max_halvings:
                raise
            logger.warning("%s; halving dtau to %g", e, dtau / 2)
            dtau /= 2
            continue
        logger.debug("%s eps=%.5f: %d steps, hit_zero=%s stalled=%s clamps=%d",
                     spec.label, ch.epsilon, len(run.tau) - 1, run.hit_zero, run.stalled, run.clamp_events)
        return run
    raise AssertionError("unreachable")


def integrate_ensemble(spec: EnsembleSpec, g0: np.ndarray, dtau: float, steps: int,
                       config: Optional[IntegrationConfig] = None) -> tuple[np.ndarray, np.ndarray]:
    """Euler-integrate a stack of states (N, D, r+1) for `steps` steps.

    Returns r1 of every member at every step, shape (N, steps+1), and the
    extinction mask. A member whose unclamped r1 falls below the hit-zero level
    is frozen at r1 = 0 for the rest of the horizon.
    """
    cfg = config or IntegrationConfig()
    H = incidence(spec)
    g = np.clip(np.asarray(g0, dtype=float), 0.0, None)
    n = g.shape[0]
    r1 = np.zeros((n, steps + 1))
    r1[:, 0] = g[:, :, 1].sum(axis=1)
    alive = r1[:, 0] >= cfg.hit_zero
    for k in range(1, steps + 1):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        sub = g[idx] + dtau * DriftTerms(g[idx], H, cfg.e_floor).value()
        raw_r1 = sub[:, :, 1].sum(axis=1)
        sub = np.clip(sub, 0.0, None)
        g[idx] = sub
        r1[idx, k] = np.where(raw_r1 < cfg.hit_zero, 0.0, sub[:, :, 1].sum(axis=1))
        alive[idx] = raw_r1 >= cfg.hit_zero
    extinct = ~alive
    r1[extinct[:, None] & (r1 < cfg.hit_zero)] = 0.0
    return r1, extinct


# =============================================================================
# STEADY STATE, THRESHOLD, GAMMA
# =============================================================================

def steady_window(spec: EnsembleSpec, epsilon: float, tau_lb: Optional[float] = None,
                  config: Optional[SteadyConfig] = None) -> tuple[float, float, float]:
    """(tau_mid, low, high) of the operational steady window."""
    cfg = config or SteadyConfig()
    tau_mid = epsilon * spec.L / 2.0
    half = spec.L * cfg.half_width_fraction
    if tau_lb is not None:
        half = min(half, tau_mid - tau_lb - 1.0)
    if half <= 0:
        raise NoSteadyWindowError(
            f"{spec.label} eps={epsilon}: no steady window (tau_mid={tau_mid:.3f}, tau_lb={tau_lb})"
        )
    return tau_mid, tau_mid - half, tau_mid + half


def steady_state_value(run: MeanRun, tau_lb: Optional[float] = None,
                       config: Optional[SteadyConfig] = None) -> float:
    """r1 read at tau_mid = eps L / 2.

    Raises NoSteadyWindowError when the run ends before the window does or when
    r1 moves by more than `flatness_tolerance` inside it.
    """
    cfg = config or SteadyConfig()
    tau_mid, low, high = steady_window(run.spec, run.epsilon, tau_lb, cfg)
    if run.stalled or run.final_tau < high:
        raise NoSteadyWindowError(
            f"{run.spec.label} eps={run.epsilon}: run ended at tau={run.final_tau:.3f} before the window end {high:.3f}"
        )
    mask = (run.tau >= low) & (run.tau <= high)
    if not mask.any():
        raise NoSteadyWindowError(f"{run.spec.label} eps={run.epsilon}: empty steady window")
    values = run.r1[mask]
    spread = float(values.max() - values.min())
    if spread > cfg.flatness_tolerance:
        raise NoSteadyWindowError(
            f"{run.spec.label} eps={run.epsilon}: r1 not flat over [{low:.2f}, {high:.2f}] (spread {spread:.2e})"
        )
    return run.r1_at(tau_mid)


def tau_lb_or_none(spec: EnsembleSpec, epsilon: float) -> Optional[float]:
    """tau_lb for the chain, or None below the uncoupled threshold."""
    fp = stall_fixed_point(spec.l, spec.r, epsilon)
    return spec.L * (epsilon - fp.beta) if fp.exists else None


def fails(spec: EnsembleSpec, epsilon: float, config: Optional[IntegrationConfig] = None) -> bool:
    """True when the mean evolution stalls macroscopically at epsilon."""
    return integrate_mean(spec, ChannelSpec(epsilon=epsilon), config=config).stalled


@lru_cache(maxsize=128)
def _threshold_cached(spec: EnsembleSpec, tol: float, cfg_json: str) -> float:
    cfg = IntegrationConfig.model_validate_json(cfg_json)
    low, high = binsearch(lambda e: fails(spec, e, cfg), 0.0, 1.0, tol)
    logger.info("%s threshold in [%.6f, %.6f]", spec.label, low, high)
    return (low + high) / 2.0


def threshold(spec: EnsembleSpec, tol: Optional[float] = None,
              config: Optional[IntegrationConfig] = None) -> float:
    """Largest epsilon at which the mean r1 stays positive through the steady phase."""
    cfg = config or IntegrationConfig()
    tol = tol or cfg.threshold_tolerance
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    # the DE threshold does not depend on M
    return _threshold_cached(spec.with_M(spec.r), tol, cfg.model_dump_json())


def gamma_param(spec: EnsembleSpec, reference_epsilon: Optional[float] = None,
                epsilon_th: Optional[float] = None, config: Optional[IntegrationConfig] = None,
                steady: Optional[SteadyConfig] = None) -> tuple[float, float, float]:
    """gamma = r1(*) / (eps_th - eps) at the reference epsilon.

    Returns (gamma, epsilon_th, reference_epsilon).
    """
    eps_th = epsilon_th if epsilon_th is not None else threshold(spec, config=config)
    offset = steady.reference_offset if steady else DEFAULT_REFERENCE_OFFSET
    eps = reference_epsilon if reference_epsilon is not None else eps_th - offset
    if eps >= eps_th:
        raise NoSteadyWindowError(f"reference eps={eps} is not below the threshold {eps_th}")
    run = integrate_mean(spec, ChannelSpec(epsilon=eps), config=config)
    r1_star = steady_state_value(run, tau_lb_or_none(spec, eps), steady)
    gamma = r1_star / (eps_th - eps)
    logger.info("%s gamma=%.4f (r1*=%.5f at eps=%.5f, eps_th=%.5f)", spec.label, gamma, r1_star, eps, eps_th)
    return gamma, eps_th, eps
