import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sweepsim.analysis import (almost_period_search, averaging_check, gronwall_check,
                               gronwall_envelope, incremental_decay, perturbation_response,
                               shift_tolerance, theorem4_bound)
from sweepsim.convex_sets import Interval, MovingSet
from sweepsim.dynamics import Perturbation
from sweepsim.errors import NotMonotoneError
from sweepsim.integrator import Scenario, bounded_solution, velocity_bound
from sweepsim.scenarios import SINE_BAND, SQRT2, coefficient, get_scenario


def affine_solution(lam, a0, t):
    """Closed form of a' = lam a + 1."""
    return (a0 + 1 / lam) * np.exp(lam * t) - 1 / lam


# ------------------------------------------------------------ Gronwall

@pytest.mark.parametrize("lam", [-2.0, -1.0, 0.5])
def test_gronwall_equality_cases(lam):
    t = np.linspace(0, 3, 3001)
    a = affine_solution(lam, 0.7, t)
    assert gronwall_check(np.column_stack([t, a]), lam, lambda s: 1.0)
    pure = 0.7 * np.exp(lam * t)
    assert gronwall_check(np.column_stack([t, pure]), lam)
    env = gronwall_envelope(t, 0.7, lam, lambda s: 1.0)
    np.testing.assert_allclose(env, a, rtol=1e-6)


@pytest.mark.parametrize("lam", [-2.0, -1.0, 0.5])
def test_gronwall_negative_control(lam):
    t = np.linspace(0, 3, 3001)
    a = affine_solution(lam, 0.7, t)
    a[1700] *= 1.01
    assert not gronwall_check(np.column_stack([t, a]), lam, lambda s: 1.0)


def test_gronwall_input_errors():
    with pytest.raises(ValueError, match="sorted"):
        gronwall_check([(0, 1), (2, 1), (1, 1)], -1.0)
    with pytest.raises(ValueError):
        gronwall_check([(0, 1), (1, 1)], -1.0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([-1.0, 1.0]), st.floats(0.1, 3), st.floats(0, 5), st.floats(0, 1))
def test_gronwall_accepts_subsolutions(sign, mag, a0, c):
    # a' = lam a + (1 - c) with c >= 0 sits under the envelope for b = 1
    lam = sign * mag
    t = np.linspace(0, 2, 801)
    a = (a0 + (1 - c) / lam) * np.exp(lam * t) - (1 - c) / lam
    assert gronwall_check(np.column_stack([t, a]), lam, lambda s: 1.0)


# ------------------------------------------------------- incremental decay

def test_incremental_decay_example1():
    s = get_scenario("example1", t_end=8.0)
    rep = incremental_decay(s, 0.0, 1.0, 1.0)
    assert rep.reliable and rep.gronwall_satisfied
    assert rep.fitted_rate <= -0.9
    assert 0.0 <= rep.r_squared <= 1.0
    gaps = np.array([g for _, g in rep.gap_samples])
    L0 = velocity_bound(bounded_solution(s, 1.0, 1e-4))
    assert np.all(np.diff(gaps) <= 2 * s.h * L0)


def test_incremental_decay_identical_starts():
    rep = incremental_decay(get_scenario("example1", t_end=2.0), 0.5, 0.5, 1.0)
    assert not rep.reliable and rep.fitted_rate is None
    assert all(g == 0.0 for _, g in rep.gap_samples)


def test_incremental_decay_detects_expansion():
    ms = MovingSet(lambda t: Interval(-2.0, 2.0), 0.0, 2.0)
    f = Perturbation(lambda t, x, e: -np.asarray(x, dtype=float))
    s = Scenario(ms, f, 0.0, 1.0, 0.0, 0.6, 1e-3)
    rep = incremental_decay(s, 1.0, -1.0, -1.0)
    assert rep.fitted_rate >= 0.9
    assert rep.gronwall_satisfied


def test_incremental_decay_with_sampled_alpha():
    from sweepsim.dynamics import estimate_monotonicity
    s = get_scenario("square_orbit", t_end=6.0)
    a_hat = estimate_monotonicity(s.field, 0.0, s.moving_set.bound_M, (0, 6), 2000)
    c = s.moving_set(0.0)
    rep = incremental_decay(s, c.project([-1.0, 1.0]), c.project([1.0, 0.0]), a_hat - 0.05)
    assert rep.gronwall_satisfied


# --------------------------------------------------- almost-period search

def test_set_family_exact_period():
    rep = almost_period_search(SINE_BAND, 1e-9, (6, 7), 0.01, (0, 20), 0.05)
    assert len(rep.periods_found) == 1
    assert rep.periods_found[0] == pytest.approx(2 * math.pi, abs=0.01)
    assert rep.residual(2 * math.pi) <= 1e-12


def test_set_family_found_shifts_satisfy_closed_form():
    rep = almost_period_search(SINE_BAND, 0.1, (1, 10), 0.01, (0, 20), 0.01)
    assert rep.periods_found
    for s in rep.periods_found:
        assert 2 * abs(math.sin(s / 2)) < 0.1
        assert rep.residual(s) < 0.1


def test_window_must_cover_shift_range():
    with pytest.raises(ValueError, match="shorter"):
        almost_period_search(SINE_BAND, 0.1, (1, 10), 0.01, (0, 15), 0.01)


def test_signal_target():
    sig = lambda t: np.column_stack([np.sin(t), np.sin(SQRT2 * t)])
    rep = almost_period_search(sig, 0.05, (430, 450), 0.005, (0, 900), 0.1)
    assert rep.periods_found
    for s in rep.periods_found:
        assert rep.residual(s) < 0.05
        assert 2 * abs(math.sin(s / 2)) < 0.05 and 2 * abs(math.sin(SQRT2 * s / 2)) < 0.05


def test_trajectory_near_periods_follow_the_forcing():
    s = get_scenario("example1", h=1e-2, t_end=360.0)
    x0 = bounded_solution(s, 1.0, 1e-4)
    rep = almost_period_search(x0, 0.1, (5, 120), 0.05, (0, 240), 0.05)
    assert rep.periods_found
    L0 = velocity_bound(x0)
    for p in rep.periods_found:
        assert rep.residual(p) < 0.1
        # x0 follows the set, so near-periods sit on multiples of 2 pi
        assert abs(p - 2 * math.pi * round(p / (2 * math.pi))) <= 0.05
        inputs = max(2 * abs(math.sin(p / 2)), 2 * abs(math.sin(SQRT2 * p / 2)))
        assert rep.residual(p) <= shift_tolerance(inputs, L0, 2.0, 1.0)
    assert rep.to_dict()["periods_found"] == rep.periods_found


def test_trajectory_shift_grid_rounding_warns():
    s = get_scenario("example1", h=1e-2, t_end=30.0)
    tr = bounded_solution(s, 1.0, 1e-4)
    with pytest.warns(UserWarning, match="rounded"):
        almost_period_search(tr, 0.1, (6, 7), 0.015, (0, 14), 0.05)


# ---------------------------------------------------- perturbation bound

def test_theorem4_bound_values():
    assert theorem4_bound(1, 2, 0) == 0
    assert theorem4_bound(1, 2, 4 * 0.01) == pytest.approx(0.2)
    assert theorem4_bound(0.5, 1, 1) == pytest.approx(1.0)
    with pytest.raises(NotMonotoneError):
        theorem4_bound(0, 2, 1)
    assert shift_tolerance(0.05, 1.0, 2.0, 1.0) == pytest.approx(math.sqrt(0.3))


@pytest.fixture(scope="module")
def response():
    return perturbation_response(get_scenario("example1"), [0.1, 0.05, 0.025, 0.0],
                                 (10.0, 20.0), 1.0)


def test_response_example1(response):
    rep = response
    assert rep.decreasing and rep.passed and not rep.window_too_early
    for g, e in zip(rep.sup_gaps[:3], rep.eps_values[:3]):
        assert g <= theorem4_bound(1, 2, 4 * e) * 1.05 + 5e-3
    assert all(rep.within_bound)


def test_response_reference_entry_at_floor(response):
    assert response.sup_gaps[-1] <= 5 * 1e-3
    assert response.bound_values[-1] == 0.0


def test_response_early_window_is_flagged():
    rep = perturbation_response(get_scenario("example1", t_end=2.0), [0.1], (0.0, 1.0), 1.0)
    assert rep.window_too_early
    assert rep.transient_bound == pytest.approx(4.0)


# ------------------------------------------------------------- averaging

def _family(amplitude, eps_field=True):
    def build(eps):
        def f(t, x, e):
            x = np.asarray(x, dtype=float)
            hf = amplitude * np.sin(t / e) if eps_field else amplitude
            return hf * x**2 + coefficient(t) * x
        field = Perturbation(f, eps0=0.0, freq_hint=lambda e: 1 / abs(e))
        return Scenario(SINE_BAND, field, eps, 0.5, 0.0, 8.0, eps / 20)
    return build


def test_averaging_zero_amplitude_hits_floor():
    avg = get_scenario("example2_averaged", t_end=8.0)
    rep = averaging_check(_family(0.0), avg, [0.1, 0.05], (4.0, 8.0))
    assert max(rep.sup_gaps) <= 1e-4 + 2 * 0.005
    assert all(b is None for b in rep.bound_values)


def test_averaging_forcing_equal_to_its_mean():
    avg = get_scenario("example2_averaged", t_end=8.0)
    rep = averaging_check(_family(0.0, eps_field=False), avg, [0.1, 0.05, 0.025], (4.0, 8.0))
    assert max(rep.sup_gaps) <= 1e-4 + 2 * 0.005
    assert max(rep.sup_gaps) - min(rep.sup_gaps) <= 1e-4 + 2 * 0.005


def test_averaging_rejects_coarse_step():
    avg = get_scenario("example2_averaged")
    coarse = lambda e: get_scenario("example2", eps=e, h=e / 5)
    with pytest.raises(ValueError, match="too coarse"):
        averaging_check(coarse, avg, [0.1], (5.0, 10.0))


def test_averaging_gap_small_at_fine_eps():
    avg = get_scenario("example2_averaged")
    rep = averaging_check(lambda e: get_scenario("example2", eps=e), avg, [0.025], (5.0, 10.0))
    assert rep.sup_gaps[0] <= 0.1
