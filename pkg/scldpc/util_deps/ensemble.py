"""
Ensemble construction - sampling (l, r, L) and stretched E(l, r, L, w) Tanner graphs.

At check position u, n(u)*M sockets are uniformly permuted and split into n(u)
blocks of M, one block per incoming (variable position, edge index) pair.
Blocks whose variable position falls outside [1, L] stay empty.
"""
import logging
from functools import lru_cache

import numpy as np
from scipy.stats import binom

from ..exceptions import UnsupportedVariantError
from ..models import EnsembleSpec, TannerGraph

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1


def position_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for one (seed, keys...) stream, reproducible independently of the others."""
    return np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, *keys]))


def _socket_permutation(spec: EnsembleSpec, u: int, seed: int) -> np.ndarray:
    blocks = spec.incoming_blocks(u)
    return position_rng(seed, 0, u).permutation(len(blocks) * spec.M)


def _valid_blocks(spec: EnsembleSpec, u: int) -> list[tuple[int, int, int]]:
    """(block index, variable position, edge index) of the non-empty blocks at u."""
    return [
        (b, i, k) for b, (i, k) in enumerate(spec.incoming_blocks(u))
        if 1 <= i <= spec.L
    ]


def sample_graph(spec: EnsembleSpec, rng_seed: int) -> TannerGraph:
    """Sample one Tanner graph; deterministic in (spec, rng_seed)."""
    M, l, r, L, D = spec.M, spec.l, spec.r, spec.L, spec.D
    checks_per_pos = np.array([spec.checks_at(u) for u in range(1, D + 1)], dtype=np.int64)
    check_offsets = np.concatenate([[0], np.cumsum(checks_per_pos)])
    n_checks = int(check_offsets[-1])

    var_checks = np.full((L * M, l), -1, dtype=np.int64)
    for u in range(1, D + 1):
        perm = _socket_permutation(spec, u, rng_seed)
        for b, i, k in _valid_blocks(spec, u):
            sockets = perm[b * M:(b + 1) * M]
            var_checks[(i - 1) * M:i * M, k] = check_offsets[u - 1] + sockets // r

    if (var_checks < 0).any():
        raise RuntimeError(f"unassigned variable edges in {spec.label}")

    flat_checks = var_checks.ravel()
    flat_vars = np.repeat(np.arange(L * M, dtype=np.int64), l)
    order = np.argsort(flat_checks, kind="stable")
    counts = np.bincount(flat_checks, minlength=n_checks)

    logger.debug("sampled %s M=%d seed=%d: %d checks", spec.label, M, rng_seed, n_checks)
    return TannerGraph(
        spec=spec,
        seed=rng_seed,
        var_checks=var_checks,
        check_position=np.repeat(np.arange(1, D + 1), checks_per_pos),
        check_offsets=check_offsets,
        check_ptr=np.concatenate([[0], np.cumsum(counts)]),
        check_vars=flat_vars[order],
    )


def design_rate(spec: EnsembleSpec) -> float:
    """Closed-form design rate of the plain (l, r, L) ensemble."""
    if spec.stretched:
        raise UnsupportedVariantError(
            f"no closed-form rate for w={spec.w}; use empirical_design_rate"
        )
    l, r, L = spec.l, spec.r, spec.L
    boundary = sum(1.0 - ((l - u) / l) ** r for u in range(1, l))
    return 1.0 - (l / r) * (1.0 - (l - 1) / L + 2.0 * boundary / L)


@lru_cache(maxsize=64)
def socket_occupancy(spec: EnsembleSpec) -> np.ndarray:
    """Per-position probability that a check socket is used, n_valid(u) / n(u)."""
    occ = np.empty(spec.D)
    for u in range(1, spec.D + 1):
        occ[u - 1] = len(_valid_blocks(spec, u)) / len(spec.incoming_blocks(u))
    occ.setflags(write=False)
    return occ


@lru_cache(maxsize=64)
def degree_pmfs(spec: EnsembleSpec) -> np.ndarray:
    """(D, r+1) original check-degree pmfs implied by socket occupancy (any w)."""
    m = np.arange(spec.r + 1)
    pmfs = binom.pmf(m[None, :], spec.r, socket_occupancy(spec)[:, None])
    pmfs.setflags(write=False)
    return pmfs


def boundary_degree_pmf(spec: EnsembleSpec, u: int) -> np.ndarray:
    """rho_{m,u} for m = 0..r at position u (plain ensemble only)."""
    if spec.stretched:
        raise UnsupportedVariantError(
            f"boundary pmf of the stretched ensemble is empirical; use empirical_degree_pmf (w={spec.w})"
        )
    if not 1 <= u <= spec.D:
        raise ValueError(f"position u={u} outside [1, {spec.D}]")
    return degree_pmfs(spec)[u - 1].copy()


def _position_degrees(spec: EnsembleSpec, u: int, seed: int) -> np.ndarray:
    """Check degrees at position u of the graph sampled with `seed`."""
    perm = _socket_permutation(spec, u, seed)
    used = [perm[b * spec.M:(b + 1) * spec.M] for b, _, _ in _valid_blocks(spec, u)]
    sockets = np.concatenate(used) if used else np.empty(0, dtype=np.int64)
    return np.bincount(sockets // spec.r, minlength=spec.checks_at(u))


def empirical_degree_pmf(spec: EnsembleSpec, u: int, samples: int, seed: int = 0) -> np.ndarray:
    """Check-degree histogram at position u over `samples` sampled graphs."""
    if not 1 <= u <= spec.D:
        raise ValueError(f"position u={u} outside [1, {spec.D}]")
    counts = np.zeros(spec.r + 1)
    for s in range(samples):
        counts += np.bincount(_position_degrees(spec, u, seed + s), minlength=spec.r + 1)
    return counts / counts.sum()


def empirical_design_rate(spec: EnsembleSpec, samples: int, seed: int = 0) -> float:
    """1 - (nonempty checks)/(L*M), averaged over sampled graphs."""
    nonempty = 0
    for s in range(samples):
        for u in range(1, spec.D + 1):
            nonempty += int(np.count_nonzero(_position_degrees(spec, u, seed + s)))
    return 1.0 - nonempty / (samples * spec.L * spec.M)


def check_degree_histogram(graph: TannerGraph, u: int) -> np.ndarray:
    """Counts of check degrees 0..r at position u of a sampled graph."""
    lo, hi = graph.check_offsets[u - 1], graph.check_offsets[u]
    return np.bincount(graph.check_degrees()[lo:hi], minlength=graph.spec.r + 1)
