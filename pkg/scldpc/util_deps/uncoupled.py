"""
Uncoupled (l, r)-regular density evolution: stall fixed point, residual fraction,
the initial-phase lower bound and the wave-speed route to gamma.
"""
import logging
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..exceptions import FitError, ScalingLawDomainError
from ..models import UncoupledFixedPoint, WaveSpeed
from .config import DEFAULT_ROOT_GRID, DEFAULT_ROOT_LOW, DEFAULT_ROOT_TOLERANCE

logger = logging.getLogger(__name__)


def binsearch(testfun: Callable[[float], bool], frm: float, to: float, precision: float) -> tuple[float, float]:
    """Bracket the switch point of a monotone predicate (False below, True above)."""
    low = frm
    high = to
    while high - low > precision:
        middle = low + (high - low) / 2
        if testfun(middle):
            high = middle
        else:
            low = middle
    return low, high


def _fixed_point_gap(x: np.ndarray | float, l: int, r: int, epsilon: float):
    return x - epsilon * (1.0 - (1.0 - x) ** (r - 1)) ** (l - 1)


def stall_fixed_point(l: int, r: int, epsilon: float) -> UncoupledFixedPoint:
    """Largest nonzero root of x = eps (1 - (1-x)^(r-1))^(l-1)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")

    grid = np.linspace(DEFAULT_ROOT_LOW, epsilon, DEFAULT_ROOT_GRID)
    gap = _fixed_point_gap(grid, l, r, epsilon)
    # rightmost crossing from <= 0 to > 0
    crossings = np.flatnonzero((gap[:-1] <= 0) & (gap[1:] > 0))
    if crossings.size == 0:
        return UncoupledFixedPoint(l=l, r=r, epsilon=epsilon)

    k = int(crossings[-1])
    if gap[k] == 0:
        x = float(grid[k])
    else:
        x = brentq(_fixed_point_gap, grid[k], grid[k + 1], args=(l, r, epsilon),
                   xtol=DEFAULT_ROOT_TOLERANCE, rtol=4 * np.finfo(float).eps)
    beta = epsilon * (1.0 - (1.0 - x) ** (r - 1)) ** l
    return UncoupledFixedPoint(l=l, r=r, epsilon=epsilon, x=float(x), beta=float(beta), exists=True)


def tau_lower_bound(l: int, r: int, L: int, epsilon: float) -> float:
    """tau_lb = L (eps - beta): variables the initial phase can resolve."""
    fp = stall_fixed_point(l, r, epsilon)
    if not fp.exists:
        raise ScalingLawDomainError(
            f"({l},{r}) has no stall fixed point at eps={epsilon}: "
            "the initial phase decodes everything and tau_lb is undefined"
        )
    return L * (epsilon - fp.beta)


def gamma_from_speed(l: int, r: int, epsilon: float, c: float) -> float:
    """gamma = 2 beta / c."""
    if c <= 0:
        raise ValueError(f"wave coefficient c must be positive, got {c}")
    beta = stall_fixed_point(l, r, epsilon).beta
    return 2.0 * beta / c


def uncoupled_bp_threshold(l: int, r: int, tol: float = 1e-7) -> float:
    """sup{eps : only x = 0 solves the fixed-point equation}."""
    _, high = binsearch(lambda e: stall_fixed_point(l, r, e).exists, 1e-6, 1.0 - 1e-9, tol)
    return high


def _leave_one_out(q: np.ndarray) -> np.ndarray:
    l = q.shape[0]
    return np.stack([np.prod(np.delete(q, k, axis=0), axis=0) for k in range(l)])


def estimate_wave_coefficient(l: int, r: int, L: int, epsilon: float, epsilon_th: float,
                              max_iter: int = 100_000, window: tuple[float, float] = (0.15, 0.4)) -> WaveSpeed:
    """Measure c from coupled density evolution with parallel updates.

    The left decoding front is located at the half-height point of the
    per-position erasure profile; c is iterations per position times
    (epsilon_th - epsilon).
    """
    if epsilon >= epsilon_th:
        raise ScalingLawDomainError(f"eps={epsilon} is not below the coupled threshold {epsilon_th}")
    fp = stall_fixed_point(l, r, epsilon)
    if not fp.exists:
        raise ScalingLawDomainError(f"no stall fixed point for ({l},{r}) at eps={epsilon}")

    D = L + l - 1
    level = fp.beta / 2.0
    lo, hi = window[0] * L, window[1] * L
    q = np.ones((l, L))  # q[k, i]: check at i+k -> variable at i erasure probability
    its, positions = [], []

    for it in range(max_iter):
        p = epsilon * _leave_one_out(q)
        pbar = np.zeros(D)
        for k in range(l):
            pbar[k:k + L] += p[k]
        pbar /= l
        for k in range(l):
            q[k] = 1.0 - (1.0 - pbar[k:k + L]) ** (r - 1)
        plr = epsilon * np.prod(q, axis=0)

        above = np.flatnonzero(plr >= level)
        if above.size == 0:
            break
        idx = int(above[0])
        if idx == 0:
            continue
        pos = idx - 1 + (level - plr[idx - 1]) / (plr[idx] - plr[idx - 1])
        if pos > hi:
            break
        if pos >= lo:
            its.append(it)
            positions.append(pos)

    if len(its) < 5:
        raise FitError(f"decoding front crossed the window in {len(its)} iterations; increase L or max_iter")
    slope = np.polyfit(its, positions, 1)[0]
    if slope <= 0:
        raise FitError(f"decoding front is not moving (slope {slope:.3g})")

    ipp = 1.0 / slope
    c = ipp * (epsilon_th - epsilon)
    logger.info("(%d,%d,%d) eps=%.5f: %.1f iterations per position, c=%.4f", l, r, L, epsilon, ipp, c)
    return WaveSpeed(c=c, beta=fp.beta, gamma_from_speed=2.0 * fp.beta / c, iterations_per_position=ipp)
