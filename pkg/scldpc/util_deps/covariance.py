"""
Covariance evolution - initial covariance, second-moment drift and the co-integrated
mean/covariance system.

Covariances are scaled by M and stored densely over the flattened DD coordinates
(index (u-1)(r+1) + j, column 0 of each position being v_u).
"""
import logging
from typing import Optional

import numpy as np
from scipy.linalg import eigvalsh
from scipy.stats import binom

from ..exceptions import NoSteadyWindowError, StepTooLargeError, UnsupportedVariantError
from ..models import (
    ChannelSpec, CovarianceConfig, CovarianceRun, CovState, DDState, EnsembleSpec, LabConfig, delta1_of,
)
from .ensemble import degree_pmfs, socket_occupancy
from .mean_evolution import (
    DriftTerms, degree_one_step, gamma_param, incidence, initial_mean, steady_window, tau_lb_or_none, threshold,
)

logger = logging.getLogger(__name__)


# =============================================================================
# INITIAL CONDITIONS
# =============================================================================

def _edge_pmfs(spec: EnsembleSpec, eps: float):
    """Residual-degree pmfs: node perspective, edge perspective, the two conditional
    forms, and the derivative of the node pmf in the socket occupancy."""
    K = spec.r + 1
    m = np.arange(K)
    rho = degree_pmfs(spec)
    occ = socket_occupancy(spec)[:, None]
    d_rho = spec.r * (binom.pmf(m[None, :] - 1, spec.r - 1, occ) - binom.pmf(m[None, :], spec.r - 1, occ))
    B = binom.pmf(m[None, :], m[:, None], eps)                          # B[m, j] = P(j of m erased)
    prev = np.maximum(m - 1, 0)[:, None]
    B_erased = np.where(m[:, None] >= 1, binom.pmf(m[None, :] - 1, prev, eps), 0.0)  # B(m-1, j-1)
    B_kept = np.where(m[:, None] >= 1, binom.pmf(m[None, :], prev, eps), 0.0)        # B(m-1, j)

    node = rho @ B
    edge_w = m[None, :] * rho
    totals = edge_w.sum(axis=1, keepdims=True)
    # positions that no in-chain block reaches have no edges at all
    edge = np.divide(edge_w, totals, out=np.zeros_like(edge_w), where=totals > 0)
    return node, edge @ B, edge @ B_erased, edge @ B_kept, d_rho @ B


def initial_covariance(spec: EnsembleSpec, ch: ChannelSpec, config: Optional[CovarianceConfig] = None,
                       allow_stretched: bool = False) -> CovState:
    """M-scaled covariance of the DD right after transmission.

    Same-position degree counts are multinomial over the checks, less the
    anticorrelation of a fixed socket count at partly filled positions. Two checks
    at different positions are correlated only through a shared variable, and a
    variable's erasure correlates with the degrees of the checks it touches.
    """
    if spec.stretched and not allow_stretched:
        raise UnsupportedVariantError(f"no closed-form initial covariance for w={spec.w}")
    cfg = config or CovarianceConfig()
    eps = ch.epsilon
    D, L, K, r = spec.D, spec.L, spec.r + 1, spec.r
    H = (incidence(spec) > 0).astype(float)
    node, a, e_erased, e_kept, node_slope = _edge_pmfs(spec, eps)
    jv = np.arange(K, dtype=float)
    jj = np.outer(jv, jv)
    idx = np.arange(D)

    C = np.zeros((D, K, D, K))

    n_blocks = np.array([len(spec.incoming_blocks(u)) for u in range(1, D + 1)], dtype=float)
    multinomial = node[:, :, None] * np.eye(K)[None] - node[:, :, None] * node[:, None, :]
    C[idx, :, idx, :] = (n_blocks / r)[:, None, None] * jj[None] * multinomial
    # the used sockets at a position are a fixed count, so its check degrees are
    # drawn without replacement and anticorrelate where some sockets stay empty
    occ = socket_occupancy(spec)
    fixed_sockets = np.einsum("uj,uz->ujz", node_slope, node_slope)
    C[idx, :, idx, :] -= (n_blocks * occ * (1.0 - occ) / r**2)[:, None, None] * jj[None] * fixed_sockets

    iL = np.arange(L)
    C[iL, 0, iL, 0] = eps * (1.0 - eps)

    shared = H.T @ H
    np.fill_diagonal(shared, 0.0)
    if cfg.printed_share_factor:
        shared = shared ** 3
    if not cfg.boundary_cross_terms:
        boundary = socket_occupancy(spec) < 1.0
        shared[boundary, :] = 0.0
        shared[:, boundary] = 0.0
    joint = (eps * np.einsum("uj,xz->ujxz", e_erased, e_erased)
             + (1.0 - eps) * np.einsum("uj,xz->ujxz", e_kept, e_kept)
             - np.einsum("uj,xz->ujxz", a, a))
    C += shared[:, None, :, None] * jj[None, :, None, :] * joint

    vr = H[:, :, None] * (jv * eps * (e_erased - a))[None, :, :]          # (L, D, K)
    C[:L, 0, :, :] += vr
    C[:, :, :L, 0] += vr.transpose(1, 2, 0)

    n = D * K
    return CovState(spec=spec, matrix=C.reshape(n, n))


# =============================================================================
# SECOND MOMENTS
# =============================================================================

def _second_moments(t: DriftTerms, K: int) -> np.ndarray:
    """M^2 E[dG dG^T] for one peeling step, from the removal position m, the
    variable position i and the hits at its other positions."""
    H = t.H
    L, D = H.shape
    r = K - 1
    v, gi, q, p, c = t.v, t.gi, t.q, t.p, t.c
    idx = np.arange(D)
    iL = np.arange(L)

    mu = np.zeros((D, K))
    mu[:, 1:] = t.mu

    P = H.T @ (v[:, None] * H)
    Q = H.T @ (gi[:, None] * H)
    pair = Q - P * (q[:, None] + q[None, :])
    np.fill_diagonal(pair, 0.0)
    F = np.einsum("yz,ya,zb->yazb", pair, mu, mu)

    # one hit at y: a degree-j check becomes degree j-1
    j = t.jvec
    rj = t.rj
    r_next = np.concatenate([rj[:, 1:], np.zeros((D, 1))], axis=1)
    S = np.zeros((D, r, r))
    S[:, np.arange(r), np.arange(r)] = j ** 2 * (r_next + rj) / t.E_safe[:, None]
    off = -j[:-1] * (j[:-1] + 1) * rj[:, 1:] / t.E_safe[:, None]
    S[:, np.arange(r - 1), np.arange(1, r)] = off
    S[:, np.arange(1, r), np.arange(r - 1)] = off
    S[~t.live_E] = 0.0
    F[idx, 1:, idx, 1:] += c[:, None, None] * S

    a = q[:, None] * P
    np.fill_diagonal(a, 0.0)
    A = a[:, :, None] * mu[None, :, :]                                      # A[m, y, b]
    F[:, 1, :, :] -= A
    F[:, :, :, 1] -= A.transpose(1, 2, 0)

    b = H * (gi[:, None] - v[:, None] * q[None, :])
    Bv = b[:, :, None] * mu[None, :, :]                                     # Bv[i, y, b]
    F[:L, 0, :, :] -= Bv
    F[:, :, :L, 0] -= Bv.transpose(1, 2, 0)

    w = q[None, :] * v[:, None] * H                                         # w[i, m]
    F[idx, 1, idx, 1] += p
    F[iL, 0, iL, 0] += gi
    F[:, 1, :L, 0] += w.T
    F[:L, 0, :, 1] += w

    n = D * K
    return F.reshape(n, n)


def second_moment_drift(state: DDState) -> np.ndarray:
    """Symmetric (n, n) second-moment drift at a DD state (requires r1 > 0)."""
    t = DriftTerms(state.g, incidence(state.spec), 1e-12)
    return _second_moments(t, state.spec.r + 1)


def psd_probe(cov: np.ndarray) -> tuple[float, float]:
    """(smallest eigenvalue, trace)."""
    lowest = float(eigvalsh(cov, subset_by_index=[0, 0])[0])
    return lowest, float(np.trace(cov))


# =============================================================================
# INTEGRATION
# =============================================================================

def _cov_run(spec: EnsembleSpec, ch: ChannelSpec, dtau: float, lab: LabConfig, stop_tau: float,
             capture_tau: Optional[float], allow_stretched: bool):
    icfg = lab.integration
    H = incidence(spec)
    K = spec.r + 1
    n = spec.D * K
    g = initial_mean(spec, ch).g
    delta = initial_covariance(spec, ch, lab.covariance, allow_stretched).matrix
    diag = np.arange(n)

    taus, d1, r1s = [0.0], [delta1_of(delta, K)], [float(g[:, 1].sum())]
    captured = None
    clamps = 0
    tau = 0.0
    while tau < stop_tau - dtau / 2:
        if capture_tau is not None and captured is None and tau >= capture_tau - dtau / 2:
            captured = (g.copy(), delta.copy())
        if r1s[-1] < icfg.hit_zero:
            logger.warning("%s eps=%.4f: mean r1 hit zero at tau=%.3f during covariance evolution",
                           spec.label, ch.epsilon, tau)
            break
        t = DriftTerms(g, H, icfg.e_floor)
        f = t.value()
        flat = f.ravel()
        Y = t.jvp(delta.reshape((n,) + g.shape)).reshape(n, n)
        d_delta = _second_moments(t, K) - np.outer(flat, flat) + Y + Y.T

        g, clamped, raw_r1, h = degree_one_step(g, f, dtau, tau, icfg)
        tau += h
        clamps += clamped
        delta = delta + h * d_delta
        delta = 0.5 * (delta + delta.T)
        neg = delta[diag, diag] < 0
        if neg.any():
            clamps += int(neg.sum())
            delta[diag[neg], diag[neg]] = 0.0

        taus.append(tau)
        d1.append(delta1_of(delta, K))
        r1s.append(0.0 if raw_r1 < icfg.hit_zero else float(g[:, 1].sum()))

    if captured is None:
        captured = (g, delta)
    return np.asarray(taus), np.asarray(d1), np.asarray(r1s), captured, clamps


def integrate_covariance(spec: EnsembleSpec, ch: ChannelSpec, dtau: Optional[float] = None,
                         lab: Optional[LabConfig] = None, tau_lb: Optional[float] = None,
                         capture_tau: Optional[float] = None, stop_tau: Optional[float] = None,
                         allow_stretched: bool = False) -> CovarianceRun:
    """Co-integrate the mean and the M-scaled covariance with Euler steps.

    Integration runs to the end of the steady window unless `stop_tau` says
    otherwise. `mean_state` and `cov` hold the state at `capture_tau` when
    given, else at the last step.
    """
    lab = lab or LabConfig()
    dtau = dtau or lab.integration.dtau
    n = spec.D * (spec.r + 1)
    if n > lab.covariance.memory_guard:
        logger.warning("%s: covariance dimension %d exceeds the guard %d", spec.label, n, lab.covariance.memory_guard)
    if tau_lb is None:
        tau_lb = tau_lb_or_none(spec, ch.epsilon)

    window = None
    try:
        window = steady_window(spec, ch.epsilon, tau_lb, lab.steady)
    except NoSteadyWindowError:
        if stop_tau is None:
            raise
    stop = stop_tau if stop_tau is not None else window[2]

    for attempt in range(lab.integration.max_halvings + 1):
        try:
            taus, d1, r1s, (g_cap, cov_cap), clamps = _cov_run(
                spec, ch, dtau, lab, stop, capture_tau, allow_stretched
            )
            break
        except StepTooLargeError as e:
            if attempt == lab.integration.max_halvings:
                raise
            logger.warning("%s; halving dtau to %g", e, dtau / 2)
            dtau /= 2

    run = CovarianceRun(
        spec=spec, epsilon=ch.epsilon, dtau=dtau, tau=taus, delta1=d1, r1=r1s,
        clamp_events=clamps, mean_state=g_cap, cov=cov_cap,
    )
    if window is not None and taus[-1] >= window[2] - dtau:
        tau_mid, low, high = window
        mask = (taus >= low) & (taus <= high)
        run.delta1_star = float(np.interp(tau_mid, taus, d1))
        run.tau_star = tau_mid
        spread = float(d1[mask].max() - d1[mask].min())
        if spread > lab.steady.delta1_relative_flatness * abs(run.delta1_star):
            logger.warning("%s eps=%.4f: delta1 not flat over the steady window (spread %.3g, value %.3g)",
                           spec.label, ch.epsilon, spread, run.delta1_star)

    lowest, trace = psd_probe(cov_cap)
    run.min_eigenvalue = lowest
    if lowest < -lab.covariance.psd_tolerance * max(trace, 1.0):
        logger.warning("%s eps=%.4f: covariance not PSD (min eigenvalue %.3g, trace %.3g)",
                       spec.label, ch.epsilon, lowest, trace)
    if clamps:
        logger.info("%s eps=%.4f: %d clamp events", spec.label, ch.epsilon, clamps)
    return run


def delta1_star_param(spec: EnsembleSpec, reference_epsilon: Optional[float] = None,
                      epsilon_th: Optional[float] = None, lab: Optional[LabConfig] = None,
                      dtau: Optional[float] = None) -> tuple[float, float]:
    """Steady delta1 at the reference epsilon (default eps_th - 0.04); returns (delta1*, eps)."""
    lab = lab or LabConfig()
    if reference_epsilon is None:
        eps_th = epsilon_th if epsilon_th is not None else threshold(spec, config=lab.integration)
        reference_epsilon = eps_th - lab.steady.reference_offset
    run = integrate_covariance(spec, ChannelSpec(epsilon=reference_epsilon), dtau, lab,
                               allow_stretched=spec.stretched)
    if run.delta1_star is None:
        raise NoSteadyWindowError(f"{spec.label} eps={reference_epsilon}: covariance run ended before the window")
    return run.delta1_star, reference_epsilon


def ratio_alpha(spec: EnsembleSpec, gamma: Optional[float] = None, delta1_star: Optional[float] = None,
                lab: Optional[LabConfig] = None) -> float:
    """alpha = gamma / sqrt(delta1*), computing whichever input is missing."""
    lab = lab or LabConfig()
    if gamma is None:
        gamma, _, _ = gamma_param(spec, config=lab.integration, steady=lab.steady)
    if delta1_star is None:
        delta1_star, _ = delta1_star_param(spec, lab=lab)
    if delta1_star <= 0:
        raise ValueError(f"delta1* must be positive, got {delta1_star}")
    return float(gamma / np.sqrt(delta1_star))
