"""
Peeling decoder on the BEC and the Monte Carlo harness around it.

The decoder repeatedly picks a degree-one check uniformly among all degree-one
checks, removes it together with its variable and that variable's l edges.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest
from tqdm import tqdm

from ..models import (
    ChannelSpec, DecodeStatus, EnsembleSpec, FailurePhase, MCResult, TannerGraph, Trajectory,
)
from .config import DEFAULT_RECORD_POINTS
from .ensemble import position_rng, sample_graph

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1
_UNIFORM_BATCH = 4096


def trial_seed(base_seed: int, index: int) -> int:
    """64-bit seed of trial `index`, independent of scheduling."""
    ss = np.random.SeedSequence([base_seed & _SEED_MASK, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class PeelingState:
    """Residual graph of one decoding run; mutated in place as the decoder peels."""

    def __init__(self, graph: TannerGraph, erased: np.ndarray, rng: np.random.Generator):
        spec = graph.spec
        self.graph = graph
        self.M = spec.M
        self.rng = rng
        self.steps = 0

        self._var_checks = graph.var_checks.tolist()
        self._check_ptr = graph.check_ptr.tolist()
        self._check_vars = graph.check_vars.tolist()
        self._check_pos = (graph.check_position - 1).tolist()

        deg = np.bincount(graph.var_checks[erased].ravel(), minlength=graph.n_checks)
        self.alive = erased.tolist()
        self.deg = deg.tolist()
        self.remaining = int(np.count_nonzero(erased))

        self.pool = np.flatnonzero(deg == 1).tolist()
        self.pool_index = [-1] * graph.n_checks
        for idx, c in enumerate(self.pool):
            self.pool_index[c] = idx

        self.deg1_per_pos = np.bincount(
            graph.check_position[deg == 1] - 1, minlength=spec.D
        ).tolist()
        self.v_per_pos = erased.reshape(spec.L, spec.M).sum(axis=1).tolist()
        self._uniforms: list[float] = []

    # -- degree-one pool (swap-remove) ------------------------------------

    def _pool_add(self, c: int) -> None:
        self.pool_index[c] = len(self.pool)
        self.pool.append(c)
        self.deg1_per_pos[self._check_pos[c]] += 1

    def _pool_remove(self, c: int) -> None:
        idx = self.pool_index[c]
        last = self.pool.pop()
        if last != c:
            self.pool[idx] = last
            self.pool_index[last] = idx
        self.pool_index[c] = -1
        self.deg1_per_pos[self._check_pos[c]] -= 1

    def _uniform(self) -> float:
        if not self._uniforms:
            self._uniforms = self.rng.random(_UNIFORM_BATCH).tolist()
        return self._uniforms.pop()

    # -- decoding -----------------------------------------------------------

    @property
    def tau(self) -> float:
        return self.steps / self.M

    @property
    def r1(self) -> float:
        return len(self.pool) / self.M

    def step(self) -> bool:
        """One peeling iteration; False when no degree-one check is left."""
        pool = self.pool
        if not pool:
            return False
        c = pool[int(self._uniform() * len(pool))]

        alive = self.alive
        v = -1
        for idx in range(self._check_ptr[c], self._check_ptr[c + 1]):
            if alive[self._check_vars[idx]]:
                v = self._check_vars[idx]
                break
        if v < 0:
            raise RuntimeError(f"degree-one check {c} has no live variable")

        alive[v] = False
        self.remaining -= 1
        self.v_per_pos[v // self.M] -= 1
        deg = self.deg
        for c2 in self._var_checks[v]:
            d = deg[c2]
            if d == 1:
                self._pool_remove(c2)
            deg[c2] = d - 1
            if d == 2:
                self._pool_add(c2)
        self.steps += 1
        return True

    def clone(self, rng_seed: int) -> "PeelingState":
        """Independent copy of the residual graph with a fresh decoder stream."""
        other = object.__new__(PeelingState)
        other.__dict__.update(self.__dict__)
        for name in ("alive", "deg", "pool", "pool_index", "deg1_per_pos", "v_per_pos"):
            setattr(other, name, list(getattr(self, name)))
        other.rng = position_rng(rng_seed, 2)
        other._uniforms = []
        return other


def transmit_and_initialize(graph: TannerGraph, ch: ChannelSpec, rng_seed: int) -> PeelingState:
    """Erase each variable with probability epsilon and drop the received ones."""
    erased = position_rng(rng_seed, 1).random(graph.n_variables) < ch.epsilon
    return PeelingState(graph, erased, position_rng(rng_seed, 2))


def degree_distribution(state: PeelingState) -> np.ndarray:
    """Unnormalized DD counts: column 0 is V_u, column j is R_{j,u}."""
    spec = state.graph.spec
    K = spec.r + 1
    deg = np.asarray(state.deg)
    counts = np.zeros((spec.D, K))
    live = deg > 0
    np.add.at(counts, ((state.graph.check_position[live] - 1), deg[live]), deg[live])
    counts[:spec.L, 0] = state.v_per_pos
    return counts


def peel_steps(state: PeelingState, steps: int) -> int:
    """Advance at most `steps` iterations; returns how many were done."""
    done = 0
    while done < steps and state.step():
        done += 1
    return done


def peel_to_end(state: PeelingState, stride: Optional[int] = None, record_positions: bool = False) -> Trajectory:
    """Decode until no degree-one check remains, recording r1 every `stride` steps."""
    M = state.M
    stride = stride or max(1, math.ceil(M / DEFAULT_RECORD_POINTS))
    taus, r1s, r1_u, v_u = [], [], [], []

    def record() -> None:
        taus.append(state.tau)
        r1s.append(state.r1)
        if record_positions:
            r1_u.append(np.asarray(state.deg1_per_pos, dtype=float) / M)
            v_u.append(np.asarray(state.v_per_pos, dtype=float) / M)

    record()
    while state.step():
        if state.steps % stride == 0:
            record()
    if taus[-1] != state.tau:
        record()

    status = DecodeStatus.DECODED if state.remaining == 0 else DecodeStatus.STALLED
    return Trajectory(
        tau=np.asarray(taus),
        r1=np.asarray(r1s),
        r1_u=np.asarray(r1_u) if record_positions else None,
        v_u=np.asarray(v_u) if record_positions else None,
        status=status,
        tau_end=state.tau,
        remaining=state.remaining,
    )


def decode_trial(spec: EnsembleSpec, ch: ChannelSpec, seed: int, stride: Optional[int] = None,
                 record_positions: bool = False) -> Trajectory:
    """Fresh graph, fresh channel, full decoding run."""
    graph = sample_graph(spec, seed)
    traj = peel_to_end(transmit_and_initialize(graph, ch, seed), stride, record_positions)
    traj.seed = seed
    return traj


def _trial_task(args: tuple) -> Trajectory:
    return decode_trial(*args)


def simulate_trials(spec: EnsembleSpec, ch: ChannelSpec, trials: int, base_seed: int,
                    parallelism: int = 1, stride: Optional[int] = None,
                    record_positions: bool = False, progress: bool = False) -> list[Trajectory]:
    """Run independent trials; output order and content independent of parallelism."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tasks = [(spec, ch, trial_seed(base_seed, i), stride, record_positions) for i in range(trials)]
    if parallelism <= 1:
        it = tqdm(tasks, desc=f"{spec.label} eps={ch.epsilon}", disable=not progress)
        return [_trial_task(t) for t in it]
    chunk = max(1, trials // (4 * parallelism))
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(tqdm(pool.map(_trial_task, tasks, chunksize=chunk), total=trials, disable=not progress))


def classify_failure(tau_stall: float, epsilon: float, L: int, tau_lb: float) -> FailurePhase:
    """Decoding phase of a stall at tau_stall."""
    if tau_stall < tau_lb:
        return FailurePhase.INITIAL
    if tau_stall <= epsilon * L - tau_lb:
        return FailurePhase.STEADY
    return FailurePhase.FINAL


def run_monte_carlo(spec: EnsembleSpec, ch: ChannelSpec, trials: int, base_seed: int,
                    parallelism: int = 1, tau_lb: Optional[float] = None,
                    confidence: float = 0.95, progress: bool = False) -> MCResult:
    """Block error estimate over fresh (graph, channel) draws."""
    trajectories = simulate_trials(spec, ch, trials, base_seed, parallelism,
                                   stride=spec.M * spec.L, progress=progress)
    return summarize_trials(spec, ch, trajectories, base_seed, tau_lb, confidence)


def summarize_trials(spec: EnsembleSpec, ch: ChannelSpec, trajectories: Sequence[Trajectory],
                     base_seed: int, tau_lb: Optional[float] = None, confidence: float = 0.95) -> MCResult:
    """Aggregate trial outcomes into an MCResult (order-insensitive counts)."""
    trials = len(trajectories)
    stalls = [t.tau_end for t in trajectories if not t.decoded]
    failures = len(stalls)
    ci = binomtest(failures, trials).proportion_ci(confidence_level=confidence, method="exact")

    phases: dict[str, int] = {}
    if tau_lb is not None:
        for tau in stalls:
            phase = classify_failure(tau, ch.epsilon, spec.L, tau_lb).value
            phases[phase] = phases.get(phase, 0) + 1

    logger.info("%s eps=%.4f: %d/%d failures", spec.label, ch.epsilon, failures, trials)
    return MCResult(
        spec=spec,
        epsilon=ch.epsilon,
        trials=trials,
        failures=failures,
        p_b=failures / trials,
        ci_low=float(ci.low),
        ci_high=float(ci.high),
        base_seed=base_seed,
        seeds=[t.seed for t in trajectories],
        stall_taus=stalls,
        failure_phases=phases,
    )


def r1_on_grid(traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    """r1 of a trajectory at the given times; zero after the run ended."""
    return np.interp(grid, traj.tau, traj.r1, right=0.0)


def empirical_temporal_covariance(spec: EnsembleSpec, ch: ChannelSpec, trials: int,
                                  zeta_grid: Sequence[float], tau_grid: Sequence[float],
                                  base_seed: int = 0, parallelism: int = 1) -> np.ndarray:
    """Sample covariance of r1(zeta) and r1(tau) across trials, shape (len(zeta), len(tau))."""
    if trials < 2:
        raise ValueError(f"a covariance needs trials >= 2, got {trials}")
    zeta = np.asarray(zeta_grid, dtype=float)
    tau = np.asarray(tau_grid, dtype=float)
    horizon = ch.epsilon * spec.L
    for name, grid in (("zeta", zeta), ("tau", tau)):
        if grid.size and (grid.min() < 0 or grid.max() > horizon):
            raise ValueError(f"{name} grid must lie in [0, {horizon:g}]")

    trajectories = simulate_trials(spec, ch, trials, base_seed, parallelism, stride=1)
    X = np.array([r1_on_grid(t, zeta) for t in trajectories])
    Y = np.array([r1_on_grid(t, tau) for t in trajectories])
    X -= X.mean(axis=0)
    Y -= Y.mean(axis=0)
    return X.T @ Y / (trials - 1)
