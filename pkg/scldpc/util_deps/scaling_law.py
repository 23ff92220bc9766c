"""
Scaling law - OU first passage, block error prediction and what-if rescaling.

r1 in the steady phase behaves like an OU process reverting at rate theta with
stationary variance delta1*/M; decoding fails when it first drops by
gamma * (eps_th - eps). All probabilities are formed in log space.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.signal import lfilter
from scipy.special import ndtr

from ..exceptions import ScalingLawDomainError
from ..models import OUParams, PredictionCurve, PredictionVariant, ScalingParams
from .config import (
    DEFAULT_QUAD_RTOL, DEFAULT_SERIES_SWITCH_C, PUBLISHED_COUPLED_THRESHOLD, PUBLISHED_DELTA1, PUBLISHED_GAMMA,
    PUBLISHED_TAU_RATIO, PUBLISHED_THETA, PUBLISHED_THRESHOLD,
)
from .ensemble import position_rng
from .uncoupled import stall_fixed_point

logger = logging.getLogger(__name__)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


# =============================================================================
# FIRST PASSAGE
# =============================================================================

def _check(a: float, b: float, s: float) -> None:
    if a <= 0 or b <= 0:
        raise ValueError(f"OU rates must be positive (a={a}, b={b})")
    if s < 0:
        raise ScalingLawDomainError(f"absorbing level s={s} is negative")


def log_mu0(a: float, b: float, s: float) -> float:
    """log of the mean first-passage time from 0 to level s."""
    _check(a, b, s)
    if s == 0:
        return -math.inf
    C = s / math.sqrt(b / a)
    base = _LOG_SQRT_2PI - math.log(a)
    if C > DEFAULT_SERIES_SWITCH_C:
        c2 = C * C
        series = 1.0 + 1.0 / c2 + 3.0 / c2 ** 2 + 15.0 / c2 ** 3
        return base + c2 / 2.0 - math.log(C) + math.log(series)
    # integrand scaled by exp(-C^2/2) so it stays O(1) at the upper end
    scaled, _ = quad(lambda z: ndtr(z) * math.exp((z * z - C * C) / 2.0), 0.0, C,
                     epsrel=DEFAULT_QUAD_RTOL, epsabs=0.0, limit=200)
    return base + C * C / 2.0 + math.log(scaled)


def mu0(a: float, b: float, s: float) -> float:
    """Mean first-passage time; inf when it exceeds the double range (use log_mu0)."""
    value = log_mu0(a, b, s)
    if value > 709.0:
        return math.inf
    return math.exp(value)


def log_mu0_upper_bound(a: float, b: float, s: float) -> float:
    _check(a, b, s)
    if s == 0:
        return -math.inf
    return _LOG_SQRT_2PI - 0.5 * math.log(a * b) + math.log(s) + s * s * a / (2.0 * b)


def mu0_upper_bound(a: float, b: float, s: float) -> float:
    """sqrt(2 pi / (a b)) s exp(s^2 a / (2 b)), strictly above mu0 for s > 0."""
    value = log_mu0_upper_bound(a, b, s)
    return math.inf if value > 709.0 else math.exp(value)


def ou_params_from_scaling(sp: ScalingParams, M: float, epsilon: float) -> OUParams:
    """a = theta, b = delta1* theta / M, s = gamma (eps_th - eps), Omega = 1/M."""
    if epsilon > sp.epsilon_th:
        raise ScalingLawDomainError(f"eps={epsilon} is above the threshold {sp.epsilon_th}: scaling law does not apply")
    return OUParams(
        a=sp.theta,
        b=sp.delta1_star * sp.theta / M,
        s=sp.gamma * (sp.epsilon_th - epsilon),
        omega=1.0 / M,
        x0=0.0,
    )


# =============================================================================
# BLOCK ERROR PREDICTION
# =============================================================================

def published_scaling_params(l: int, r: int, L: int = 100) -> ScalingParams:
    """ScalingParams assembled from the published tables (tau_lb rescaled to L)."""
    key = (l, r)
    missing = [name for name, table in (("gamma", PUBLISHED_GAMMA), ("delta1*", PUBLISHED_DELTA1),
                                        ("theta", PUBLISHED_THETA), ("threshold", PUBLISHED_THRESHOLD))
               if key not in table]
    if missing:
        raise ValueError(f"no published {', '.join(missing)} for ({l},{r})")
    eps_th = PUBLISHED_COUPLED_THRESHOLD.get((l, r, L), PUBLISHED_THRESHOLD[key])
    return ScalingParams(
        l=l, r=r, L=L, epsilon_th=eps_th, gamma=PUBLISHED_GAMMA[key],
        delta1_star=PUBLISHED_DELTA1[key], theta=PUBLISHED_THETA[key],
        tau_lb=PUBLISHED_TAU_RATIO[key] * L,
    )


def resolve_tau_lb(sp: ScalingParams, L: int, epsilon: float, mode: str = "epsilon") -> Optional[float]:
    """tau_lb used by the scaling law: at epsilon, the stored value rescaled to L, or zero."""
    if mode == "zero":
        return 0.0
    if mode == "fixed":
        return sp.tau_lb * L / sp.L
    if mode == "epsilon":
        fp = stall_fixed_point(sp.l, sp.r, epsilon)
        return L * (epsilon - fp.beta) if fp.exists else None
    raise ValueError(f"unknown tau_lb mode {mode!r}")


def _log_block_error(sp: ScalingParams, L: int, M: float, epsilon: float,
                     variant: PredictionVariant, tau_lb_mode: str) -> tuple[float, Optional[str]]:
    """(log P_B, caveat)."""
    tau_lb = resolve_tau_lb(sp, L, epsilon, tau_lb_mode)
    if tau_lb is None:
        return -math.inf, f"eps={epsilon:g}: no stall fixed point, the initial phase decodes everything"
    span = epsilon * L - tau_lb
    if span <= 0:
        return -math.inf, f"eps={epsilon:g}: steady phase empty (eps L={epsilon * L:g} <= tau_lb={tau_lb:g})"

    ou = ou_params_from_scaling(sp, M, epsilon)
    if ou.s == 0:
        return 0.0, f"eps={epsilon:g}: at threshold"

    if variant == PredictionVariant.LOW_ERROR:
        delta = sp.epsilon_th - epsilon
        log_p = (math.log(sp.theta * math.sqrt(sp.delta1_star) * span)
                 - _LOG_SQRT_2PI - math.log(sp.gamma * math.sqrt(M) * delta)
                 - M * sp.gamma ** 2 * delta ** 2 / (2.0 * sp.delta1_star))
        return min(log_p, 0.0), None

    log_m = log_mu0(ou.a, ou.b, ou.s) if variant == PredictionVariant.FULL \
        else log_mu0_upper_bound(ou.a, ou.b, ou.s)
    x = math.exp(math.log(span) - log_m)
    # log(1 - exp(-x)), accurate for tiny and large x
    return (math.log(-math.expm1(-x)) if x > 0 else -math.inf), None


def predict_block_error(sp: ScalingParams, L: int, M: float, epsilon: float,
                        variant: PredictionVariant = PredictionVariant.FULL,
                        tau_lb_mode: str = "epsilon") -> float:
    """P_B = 1 - exp(-(eps L - tau_lb) / mu0) or one of its approximations."""
    log_p, caveat = _log_block_error(sp, L, M, epsilon, PredictionVariant(variant), tau_lb_mode)
    if caveat:
        logger.debug("%s", caveat)
    return math.exp(log_p)


def predict_curve(sp: ScalingParams, L: int, M: float, epsilons: Sequence[float],
                  variant: PredictionVariant = PredictionVariant.FULL, m_sl: Optional[float] = None,
                  tau_lb_mode: str = "epsilon") -> PredictionCurve:
    """Prediction over an epsilon grid; `m_sl` replaces M inside the law when given."""
    variant = PredictionVariant(variant)
    M_eff = m_sl if m_sl is not None else M
    p_b, caveats = [], []
    for eps in epsilons:
        log_p, caveat = _log_block_error(sp, L, M_eff, float(eps), variant, tau_lb_mode)
        p_b.append(math.exp(log_p))
        if caveat:
            caveats.append(caveat)
    return PredictionCurve(epsilon=[float(e) for e in epsilons], p_b=p_b, variant=variant,
                           L=L, M=M, m_sl=m_sl, caveats=caveats)


def predict_M_rescaling(sp: ScalingParams, p_b_measured: float, m_sl: float, k: float, epsilon: float) -> float:
    """P_B(kM) = P_B(M) / sqrt(k) * exp(-M_SL gamma^2 (k-1) Delta^2 / (2 delta1*))."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k == 1:
        return p_b_measured
    if p_b_measured <= 0:
        return 0.0
    delta = sp.epsilon_th - epsilon
    log_p = (math.log(p_b_measured) - 0.5 * math.log(k)
             - m_sl * sp.gamma ** 2 * (k - 1) * delta ** 2 / (2.0 * sp.delta1_star))
    return math.exp(min(log_p, 0.0))


def predict_L_rescaling(sp: ScalingParams, p_b: float, L: int, c: float, epsilon: float,
                        tau_lb_mode: str = "epsilon") -> float:
    """P_B(cL) = 1 - (1 - P_B(L))^((c eps L - tau_lb) / (eps L - tau_lb))."""
    if c <= 0:
        raise ValueError(f"chain factor c must be positive, got {c}")
    tau_lb = resolve_tau_lb(sp, L, epsilon, tau_lb_mode) or 0.0
    span = epsilon * L - tau_lb
    if span <= 0:
        raise ScalingLawDomainError(f"eps L={epsilon * L:g} does not exceed tau_lb={tau_lb:g}")
    exponent = (c * epsilon * L - tau_lb) / span
    if p_b >= 1:
        return 1.0
    return float(-np.expm1(exponent * np.log1p(-p_b)))


def calibrate_m_sl(sp: ScalingParams, L: int, epsilons: Sequence[float], measured: Sequence[float],
                   M_grid: Sequence[float], variant: PredictionVariant = PredictionVariant.FULL,
                   tau_lb_mode: str = "epsilon") -> tuple[float, float]:
    """M_SL on the grid minimizing max |log(P_SL / P_measured)|; returns (M_SL, that max)."""
    eps = np.asarray(epsilons, dtype=float)
    meas = np.asarray(measured, dtype=float)
    usable = meas > 0
    if not usable.any():
        raise ValueError("no measured point with P_B > 0 to calibrate against")
    best, best_err = None, math.inf
    for m in M_grid:
        pred = np.array([predict_block_error(sp, L, m, e, variant, tau_lb_mode) for e in eps[usable]])
        with np.errstate(divide="ignore"):
            err = float(np.max(np.abs(np.log(pred) - np.log(meas[usable]))))
        if err < best_err:
            best, best_err = float(m), err
    logger.info("calibrated M_SL=%s (max |log ratio| %.3f)", best, best_err)
    return best, best_err


def waterfall_slope(epsilons: Sequence[float], p_b: Sequence[float]) -> np.ndarray:
    """d log P_B / d eps by finite differences; nan where P_B is zero."""
    p = np.asarray(p_b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), np.nan)
    return np.gradient(logs, np.asarray(epsilons, dtype=float))


# =============================================================================
# OU SIMULATION
# =============================================================================

def _innovation_scale(params: OUParams) -> float:
    g = params.g
    return math.sqrt(params.stationary_variance * (1.0 - g * g))


def simulate_ou(params: OUParams, horizon: float, rng_seed: int) -> tuple[np.ndarray, Optional[int]]:
    """Exact discretization X_{i+1} = g X_i + sqrt((b/a)(1 - g^2)) Z_i at spacing Omega.

    Returns the path and the first index with X >= s (None if never reached).
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    n = int(math.ceil(horizon / params.omega)) + 1
    noise = position_rng(rng_seed, 4).standard_normal(n) * _innovation_scale(params)
    noise[0] = params.x0
    path = lfilter([1.0], [1.0, -params.g], noise)
    hits = np.flatnonzero(path >= params.s)
    return path, (int(hits[0]) if hits.size else None)


def sample_first_passage_times(params: OUParams, paths: int, horizon: float, rng_seed: int,
                               block: int = 4096) -> np.ndarray:
    """First-passage times of `paths` independent paths; nan when not absorbed within horizon."""
    if paths < 1:
        raise ValueError(f"paths must be >= 1, got {paths}")
    rng = position_rng(rng_seed, 5)
    max_steps = int(math.ceil(horizon / params.omega))
    g = params.g
    scale = _innovation_scale(params)
    times = np.full(paths, np.nan)
    if params.x0 >= params.s:
        times[:] = 0.0
        return times

    active = np.arange(paths)
    x = np.full(paths, params.x0)
    offset = 0
    while active.size and offset < max_steps:
        width = min(block, max_steps - offset)
        noise = rng.standard_normal((active.size, width)) * scale
        y, _ = lfilter([1.0], [1.0, -g], noise, axis=1, zi=(g * x)[:, None])
        crossed = y >= params.s
        hit = crossed.any(axis=1)
        first = crossed.argmax(axis=1)
        times[active[hit]] = (offset + first[hit] + 1) * params.omega
        x = y[~hit, -1]
        active = active[~hit]
        offset += width
    if active.size:
        logger.debug("%d of %d OU paths not absorbed within horizon %g", active.size, paths, horizon)
    return times
