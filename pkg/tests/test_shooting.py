import numpy as np
import pytest

from biharm.dynamics import F_potential
from biharm.params import DomainError, make_params
from biharm.shooting import (SHOOTING_CONFIG, BracketFailed, ShotKind, classify_shot,
                             find_beta_star, initial_energy, periodicity_screen,
                             trapping_radius)

P8 = make_params(8)

#: beta* for n=8, a=4 (bisection to adjacent doubles)
BETA_STAR_8_4 = 9.299114982540473


@pytest.fixture(scope="module")
def shot84():
    return find_beta_star(P8, 4.0)


def test_trapping_radius_against_quartic_roots():
    cap = 1.05 * P8.beta0
    level = 0.5 * cap**2 + F_potential(P8, 4.0)
    # F(v) = v^4/4 - 32 v^2
    roots = np.roots([0.25, 0.0, -32.0, 0.0, -level])
    r_star = max(r.real for r in roots if abs(r.imag) < 1e-9)
    R = trapping_radius(P8, 4.0, cap)
    assert r_star <= R / 1.1 <= r_star * 1.001
    assert F_potential(P8, R) > level


def test_trapping_radius_at_beta0():
    level = 0.5 * P8.beta0**2 - 448.0
    roots = np.roots([0.25, 0.0, -32.0, 0.0, -level])
    r_star = max(r.real for r in roots if abs(r.imag) < 1e-9)
    assert r_star == pytest.approx(10.67623, abs=1e-5)
    assert r_star <= trapping_radius(P8, 4.0, P8.beta0) / 1.1 <= r_star * 1.001


def test_trapping_radius_rejects_small_cap():
    with pytest.raises(DomainError):
        trapping_radius(P8, 4.0, 0.5 * P8.beta0)


def test_zero_beta_crosses_zero():
    out = classify_shot(P8, 4.0, 0.0)
    assert out.kind is ShotKind.CROSSED_ZERO and out.kind.side == "S"
    assert out.trajectory.ys[-1][0] == pytest.approx(0.0, abs=1e-12)


def test_large_beta_escapes_monotonically():
    out = classify_shot(P8, 4.0, 1.05 * P8.beta0)
    assert out.kind in (ShotKind.EXCEEDED_R, ShotKind.BLOW_UP)
    assert out.kind.side == "T"
    assert np.all(out.trajectory.ys[1:, 1] > 0.0)


def test_classify_validation():
    with pytest.raises(DomainError):
        classify_shot(P8, 8.0, 1.0)
    with pytest.raises(DomainError):
        classify_shot(P8, 4.0, -1.0)
    assert ShotKind.BOUNDED_TO_HORIZON.side is None


def test_beta_star_regression(shot84):
    assert shot84.beta_star == BETA_STAR_8_4
    lo, hi = shot84.bracket
    assert np.nextafter(lo, np.inf) >= hi
    assert shot84.outcome_low is ShotKind.CROSSED_ZERO
    assert shot84.outcome_high.side == "T"
    assert not shot84.monotonicity_violations


def test_history_is_consistent(shot84):
    for beta, kind in shot84.history:
        if beta <= shot84.bracket[0]:
            assert kind.side == "S"
        if beta >= shot84.bracket[1]:
            assert kind.side == "T"


def test_screen_sees_three_minima(shot84):
    m = shot84.screen_minima
    assert len(m) >= 3 and 0.0 in m
    assert m == tuple(sorted(m))
    assert m[-1] == pytest.approx(3.17033307902, abs=1e-6)


def test_screen_on_crossing_shot_is_short():
    out = classify_shot(P8, 4.0, 0.0, extrema=True)
    assert periodicity_screen(P8, 4.0, out.R, out.trajectory) == [0.0]


def test_coarse_tolerance():
    res = find_beta_star(P8, 4.0, beta_tol=1e-6, validate=False)
    assert res.bracket_width <= 1e-6
    assert abs(res.beta_star - BETA_STAR_8_4) <= 1e-6


def test_bracket_failure_on_short_horizon():
    with pytest.raises(BracketFailed):
        find_beta_star(P8, 4.0, SHOOTING_CONFIG.replace(horizon=0.1))


@pytest.mark.parametrize("a", [0.0, -1.0, 8.0, 9.0])
def test_find_beta_star_domain(a):
    with pytest.raises(DomainError):
        find_beta_star(P8, a)


def test_initial_energy():
    assert initial_energy(P8, 4.0, 3.0) == pytest.approx(4.5 + F_potential(P8, 4.0), rel=1e-15)
