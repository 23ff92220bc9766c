"""Uncoupled density evolution: stall fixed point, tau_lb and the wave-speed gamma."""
import pytest

from scldpc import FitError, ScalingLawDomainError
from scldpc.util_deps.uncoupled import (
    binsearch,
    estimate_wave_coefficient,
    gamma_from_speed,
    stall_fixed_point,
    tau_lower_bound,
    uncoupled_bp_threshold,
)


def test_fixed_point_below_coupled_threshold():
    fp = stall_fixed_point(3, 6, 0.47815)

    assert fp.exists, "a stall point exists above the BP threshold"
    assert fp.x == pytest.approx(0.41475, abs=1e-5), f"x at eps=0.47815, got {fp.x}"
    assert fp.beta == pytest.approx(0.386273, abs=1e-5), f"beta at eps=0.47815, got {fp.beta}"


def test_fixed_point_and_tau_lb_at_coupled_threshold():
    fp = stall_fixed_point(3, 6, 0.48815)

    assert fp.x == pytest.approx(0.432261, abs=1e-5), "x at the (3,6,50) threshold"
    assert fp.beta == pytest.approx(0.406764, abs=1e-5), "beta at the (3,6,50) threshold"
    assert tau_lower_bound(3, 6, 50, 0.48815) == pytest.approx(4.0693, abs=1e-3), "tau_lb = L (eps - beta)"


def test_fixed_point_solves_its_equation():
    fp = stall_fixed_point(4, 8, 0.49)
    residual = fp.x - 0.49 * (1 - (1 - fp.x) ** 7) ** 3

    assert abs(residual) < 1e-10, f"x should solve the fixed-point equation, residual {residual}"


def test_no_fixed_point_below_bp_threshold():
    fp = stall_fixed_point(3, 6, 0.42)

    assert not fp.exists, "below 0.4294 BP decodes everything"
    assert fp.x == 0.0 and fp.beta == 0.0, "defaults when no stall point exists"
    with pytest.raises(ScalingLawDomainError):
        tau_lower_bound(3, 6, 50, 0.42)


def test_fixed_point_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        stall_fixed_point(3, 6, 0.0)
    with pytest.raises(ValueError):
        stall_fixed_point(3, 6, 1.0)


def test_uncoupled_bp_threshold_36():
    assert uncoupled_bp_threshold(3, 6) == pytest.approx(0.4294, abs=5e-4), "(3,6) BP threshold"


def test_gamma_from_speed():
    gamma = gamma_from_speed(3, 6, 0.47815, 0.18)

    assert gamma == pytest.approx(4.29, abs=0.01), f"2 beta / c, got {gamma}"
    with pytest.raises(ValueError):
        gamma_from_speed(3, 6, 0.47815, 0.0)


def test_binsearch_brackets_switch_point():
    low, high = binsearch(lambda x: x > 0.3, 0.0, 1.0, 1e-6)

    assert low <= 0.3 <= high, "switch point inside the bracket"
    assert high - low <= 1e-6, "bracket narrower than the precision"


def test_wave_coefficient_domain_errors():
    with pytest.raises(ScalingLawDomainError):
        estimate_wave_coefficient(3, 6, 50, 0.49, 0.48815)
    with pytest.raises(ScalingLawDomainError):
        estimate_wave_coefficient(3, 6, 50, 0.42, 0.48815)


def test_wave_coefficient_needs_a_long_enough_chain():
    with pytest.raises(FitError):
        estimate_wave_coefficient(3, 6, 50, 0.47815, 0.48815, max_iter=3)


@pytest.mark.integration
def test_wave_coefficient_reproduces_gamma():
    speed = estimate_wave_coefficient(3, 6, 200, 0.47815, 0.48815)

    assert speed.gamma_from_speed == pytest.approx(4.31, rel=0.1), "wave speed implies gamma near 4.3"
