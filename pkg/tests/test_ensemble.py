"""Ensemble construction: spec validation, sampling, rates and degree pmfs."""
import numpy as np
import pytest
from scipy.stats import binom, chisquare

from scldpc import ChannelSpec, EnsembleSpec, UnsupportedVariantError
from scldpc.util_deps.ensemble import (
    boundary_degree_pmf,
    check_degree_histogram,
    design_rate,
    empirical_degree_pmf,
    empirical_design_rate,
    sample_graph,
    socket_occupancy,
)
from scldpc.util_deps.peeling import transmit_and_initialize


# =============================================================================
# EnsembleSpec
# =============================================================================

def test_spec_geometry():
    spec = EnsembleSpec(l=3, r=6, L=50, M=6)

    assert spec.D == 52, "D = L + l - 1 for w = 1"
    assert spec.label == "(3,6,50)", "plain label"
    assert spec.check_positions(5) == [5, 6, 7], "variable at i connects to i..i+l-1"
    assert spec.checks_at(1) == 3, "l*M/r checks per position"


def test_stretched_spec_geometry():
    spec = EnsembleSpec(l=3, r=6, L=10, M=6, w=2)

    assert spec.D == 14, "D = L + w(l-1)"
    assert spec.label == "E(3,6,10,2)", "stretched label carries w"
    assert spec.check_positions(3) == [3, 5, 7], "odd positions stride w"
    assert spec.check_positions(4) == [4, 5, 6], "even positions stride 1"


def test_spec_rejects_r_below_l():
    with pytest.raises(ValueError):
        EnsembleSpec(l=6, r=3, L=10, M=6)


def test_spec_rejects_indivisible_sockets():
    with pytest.raises(ValueError, match="divisible"):
        EnsembleSpec(l=3, r=6, L=10, M=1)


def test_with_M_revalidates():
    spec = EnsembleSpec(l=3, r=6, L=10, M=6)

    assert spec.with_M(12).M == 12, "M replaced"
    assert spec.with_M(12).L == 10, "other fields kept"
    with pytest.raises(ValueError):
        spec.with_M(5)


# =============================================================================
# SAMPLING
# =============================================================================

def test_variable_edges_hit_consecutive_positions():
    spec = EnsembleSpec(l=3, r=6, L=50, M=6)
    graph = sample_graph(spec, 7)

    for v in range(4 * spec.M, 5 * spec.M):
        positions = graph.check_position[graph.var_checks[v]].tolist()
        assert positions == [5, 6, 7], f"variable {v} at position 5 should touch 5, 6, 7, got {positions}"


def test_sample_graph_is_deterministic(small_spec):
    a = sample_graph(small_spec, 11)
    b = sample_graph(small_spec, 11)
    c = sample_graph(small_spec, 12)

    assert np.array_equal(a.var_checks, b.var_checks), "same seed gives the same graph"
    assert not np.array_equal(a.var_checks, c.var_checks), "different seeds give different graphs"


def test_graph_edge_counts(small_spec):
    graph = sample_graph(small_spec, 3)

    assert graph.n_variables == small_spec.L * small_spec.M, "L*M variables"
    assert graph.check_degrees().sum() == small_spec.l * graph.n_variables, "every variable has l edges"
    assert graph.check_degrees().max() <= small_spec.r, "no check exceeds degree r"
    interior = 5
    assert graph.edges_per_position()[interior - 1] == small_spec.l * small_spec.M, \
        "interior positions carry l*M edges"


def test_check_degree_histogram_counts_every_check(small_spec):
    graph = sample_graph(small_spec, 5)

    for u in range(1, small_spec.D + 1):
        hist = check_degree_histogram(graph, u)
        assert hist.sum() == small_spec.checks_at(u), f"histogram at u={u} should count every check"
    assert check_degree_histogram(graph, 4)[small_spec.r] == small_spec.checks_at(4), \
        "interior checks all have full degree"


# =============================================================================
# RATE AND DEGREE PMFS
# =============================================================================

def test_design_rate_36_50():
    rate = design_rate(EnsembleSpec(l=3, r=6, L=50, M=6))

    assert rate == pytest.approx(0.4817832, abs=1e-6), f"(3,6,50) design rate, got {rate}"


def test_design_rate_rejects_stretched():
    with pytest.raises(UnsupportedVariantError):
        design_rate(EnsembleSpec(l=3, r=6, L=10, M=6, w=2))


def test_empirical_rate_close_to_design_rate():
    spec = EnsembleSpec(l=3, r=6, L=10, M=60)
    empirical = empirical_design_rate(spec, samples=20, seed=1)

    assert empirical == pytest.approx(design_rate(spec), abs=0.01), "empirical rate near closed form"


def test_boundary_pmf_first_position():
    spec = EnsembleSpec(l=3, r=6, L=50, M=6)
    pmf = boundary_degree_pmf(spec, 1)

    assert np.allclose(pmf, binom.pmf(np.arange(7), 6, 1 / 3)), "u=1 uses one of three socket blocks"


def test_boundary_pmf_symmetry_and_interior():
    spec = EnsembleSpec(l=3, r=6, L=50, M=6)

    assert np.allclose(boundary_degree_pmf(spec, 51), boundary_degree_pmf(spec, 2)), \
        "right boundary mirrors the left one"
    interior = boundary_degree_pmf(spec, 25)
    assert interior[6] == pytest.approx(1.0), "interior checks have degree r"
    assert interior[:6].sum() == pytest.approx(0.0), "no lower degrees in the interior"


def test_boundary_pmf_errors():
    spec = EnsembleSpec(l=3, r=6, L=50, M=6)

    with pytest.raises(ValueError):
        boundary_degree_pmf(spec, 0)
    with pytest.raises(ValueError):
        boundary_degree_pmf(spec, spec.D + 1)
    with pytest.raises(UnsupportedVariantError):
        boundary_degree_pmf(EnsembleSpec(l=3, r=6, L=10, M=6, w=2), 1)


def test_socket_occupancy_stretched():
    spec = EnsembleSpec(l=3, r=6, L=10, M=6, w=2)
    occ = socket_occupancy(spec)

    assert occ.shape == (spec.D,), "one value per check position"
    assert np.all((occ >= 0) & (occ <= 1)), "occupancy is a probability"
    assert occ[-1] == pytest.approx(0.0), "last even position only receives out-of-chain blocks"
    assert occ[6] == pytest.approx(1.0), "position 7 is interior"


def test_empirical_pmf_matches_binomial_at_boundary():
    spec = EnsembleSpec(l=3, r=6, L=10, M=60)
    pmf = empirical_degree_pmf(spec, 1, samples=50, seed=2)

    assert pmf.sum() == pytest.approx(1.0), "pmf normalized"
    assert np.allclose(pmf, binom.pmf(np.arange(7), 6, 1 / 3), atol=0.05), \
        "sampled boundary degrees follow Binomial(r, 1/3)"


@pytest.mark.parametrize("u, occupancy", [(1, 1 / 3), (2, 2 / 3)])
def test_boundary_degrees_chi_square(u, occupancy):
    spec = EnsembleSpec(l=3, r=6, L=10, M=6000)
    samples = 10
    counts = empirical_degree_pmf(spec, u, samples=samples, seed=5) * samples * spec.checks_at(u)
    expected = binom.pmf(np.arange(7), 6, occupancy) * counts.sum()

    result = chisquare(np.round(counts), expected)

    assert result.pvalue > 1e-3, f"degrees at u={u} depart from Binomial(6, {occupancy:.3f}): p={result.pvalue:.2e}"


def test_interior_edges_come_uniformly_from_the_window():
    spec = EnsembleSpec(l=3, r=6, L=10, M=600)
    state = transmit_and_initialize(sample_graph(spec, 4), ChannelSpec(epsilon=0.45), 4)
    graph = state.graph
    erased = np.flatnonzero(state.alive)

    check_pos = graph.check_position[graph.var_checks[erased]]
    offsets = check_pos - (erased // spec.M + 1)[:, None]
    interior = (check_pos >= spec.l) & (check_pos <= spec.L)
    counts = np.bincount(offsets[interior], minlength=spec.l)

    assert len(counts) == spec.l, "edges only reach the l positions ahead of their variable"
    assert chisquare(counts).pvalue > 1e-3, f"offsets {counts} not uniform"
