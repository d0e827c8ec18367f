import math

import mpmath as mp
import numpy as np
import pytest

from biharm.dynamics import (F_potential, PhaseState, energy, f_nonlinearity, homoclinic,
                             homoclinic_derivatives, linearized_frequency_at_a0, make_field,
                             ode_residual, relative_ode_residual, rhs)
from biharm.params import DomainError, make_generic_params, make_params

mp.mp.dps = 30


@pytest.mark.parametrize("n", [5, 6, 8, 10])
@pytest.mark.parametrize("t", [-3.0, -0.7, 0.0, 0.4, 2.5])
def test_homoclinic_derivatives_match_mpmath(n, t):
    P = make_params(n)
    k = mp.mpf(n - 4) / 2
    cn = mp.mpf((n - 4) * (n - 2) * n * (n + 2)) ** (mp.mpf(n - 4) / 8)
    g = lambda s: cn * (2 * mp.cosh(s)) ** (-k)
    got = homoclinic_derivatives(P, t)
    for order in range(5):
        ref = float(mp.diff(g, t, order))
        assert got[order] == pytest.approx(ref, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("n", [5, 6, 8, 9])
def test_homoclinic_solves_ode_with_zero_energy(n):
    P = make_params(n)
    for t in np.linspace(-12, 12, 241):
        v, v1, v2, v3, v4 = homoclinic_derivatives(P, t)
        assert relative_ode_residual(P, v, v2, v4) < 1e-13
        assert abs(energy(P, PhaseState(t, v, v1, v2, v3))) < 1e-10


def test_homoclinic_peak_and_shift():
    P = make_params(8)
    assert homoclinic(P, 0.0).v == pytest.approx(P.cn / 4, rel=1e-15)
    assert homoclinic(P, 1.3, T=1.3).v == homoclinic(P, 0.0).v
    # far tails stay finite and positive
    assert 0.0 < homoclinic(P, 300.0).v < 1e-250


def test_homoclinic_needs_dimension():
    with pytest.raises(DomainError):
        homoclinic_derivatives(make_generic_params(20, 64, 3), 0.0)


@pytest.mark.parametrize("params", [make_params(5), make_params(8), make_generic_params(3, 1, 2.5)])
def test_F_is_primitive_of_f(params):
    for v in [-1.3, -0.2, 0.0, 0.4, 0.9, 1.7]:
        h = 1e-6
        fd = (F_potential(params, v + h) - F_potential(params, v - h)) / (2 * h)
        assert fd == pytest.approx(f_nonlinearity(params, v), rel=1e-7, abs=1e-8)
    assert F_potential(params, 0.0) == 0.0


def test_f_is_odd_for_even_power():
    P = make_params(12)  # p = 2
    assert P.p_int == 2
    assert f_nonlinearity(P, -0.7) == -f_nonlinearity(P, 0.7)


def test_rhs_and_field_agree():
    P = make_params(6)
    s = PhaseState(0.3, 1.2, -0.4, 0.8, 2.1)
    field, integral = make_field(P)
    np.testing.assert_allclose(field(s.t, s.as_array()), rhs(P, s), rtol=1e-15)
    assert integral(s.as_array()) == pytest.approx(energy(P, s), rel=1e-14)
    assert rhs(P, s)[3] - P.A * s.v2 - f_nonlinearity(P, s.v) == 0.0


def test_energy_is_first_integral():
    # dE/dt = -v3 v2 - v'''' v1 + v2 v3 + A v1 v2 + f(v) v1 = v1 (A v2 + f - v'''') = 0
    P = make_params(7)
    for s in [PhaseState(0, 1.0, 0.3, -0.2, 0.5), PhaseState(0, 2.0, -1.0, 0.1, 0.0)]:
        y = s.as_array()
        dy = rhs(P, s)
        h = 1e-6
        e_plus = energy(P, PhaseState.from_array(0, y + h * dy))
        e_minus = energy(P, PhaseState.from_array(0, y - h * dy))
        assert (e_plus - e_minus) / (2 * h) == pytest.approx(0.0, abs=1e-7)


def test_linearized_frequency_n8():
    P = make_params(8)
    # omega^4 + A omega^2 - (p-1) B = 0
    r = np.roots([1.0, P.A, -(P.p - 1) * P.B])
    omega = math.sqrt(max(r.real))
    assert linearized_frequency_at_a0(P) == pytest.approx(omega, rel=1e-14)
    assert 2 * math.pi / linearized_frequency_at_a0(P) == pytest.approx(2.7823315, abs=1e-7)


def test_phase_state_validation_and_reflection():
    with pytest.raises(ValueError):
        PhaseState(0.0, math.nan, 0, 0, 0)
    with pytest.raises(ValueError):
        PhaseState(0.0, 1.0, math.inf, 0, 0)
    s = PhaseState(1.0, 2.0, 3.0, 4.0, 5.0).reflected()
    assert (s.v, s.v1, s.v2, s.v3) == (2.0, -3.0, 4.0, -5.0)


def test_ode_residual_of_constant():
    P = make_params(8)
    assert ode_residual(P, P.a0, 0.0, 0.0) == 0.0
    assert relative_ode_residual(P, 0.0, 0.0, 0.0) == 0.0
