import math

import numpy as np
import pytest

from biharm.dynamics import PhaseState, homoclinic
from biharm.integrator import (EventSpec, IntegrationConfig, StiffFailure, Termination,
                               VectorField, component_event, evaluate, integrate,
                               integrate_fixed)
from biharm.params import make_params

TIGHT = IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14, horizon=10.0)


def oscillator():
    return VectorField(lambda t, y: np.array([y[1], -y[0]]),
                       lambda y: 0.5 * (y[0] ** 2 + y[1] ** 2), 2)


def test_oscillator_dense_output_and_derivative():
    tr = integrate(oscillator(), (0.0, np.array([1.0, 0.0])), TIGHT)
    assert tr.termination is Termination.REACHED_HORIZON
    assert tr.t_end == 10.0
    for t in np.linspace(0, 10, 37):
        np.testing.assert_allclose(tr.y(t), [math.cos(t), -math.sin(t)], atol=1e-11)
        np.testing.assert_allclose(tr.dy(t), [-math.sin(t), -math.cos(t)], atol=1e-9)
    assert tr.energy_drift() < 1e-11


def test_events_direction_and_location():
    evs = [component_event("up", 0, 0.0, direction=1),
           component_event("down", 0, 0.0, direction=-1),
           component_event("level", 0, 0.5)]
    tr = integrate(oscillator(), (0.0, np.array([1.0, 0.0])), TIGHT, evs)
    ups = [e.t for e in tr.events_of("up")]
    downs = [e.t for e in tr.events_of("down")]
    np.testing.assert_allclose(downs, [math.pi / 2, 5 * math.pi / 2], atol=1e-12)
    np.testing.assert_allclose(ups, [3 * math.pi / 2], atol=1e-12)
    lv = [e.t for e in tr.events_of("level")]
    np.testing.assert_allclose(lv[:2], [math.pi / 3, 5 * math.pi / 3], atol=1e-12)
    assert [e.t for e in tr.events] == sorted(e.t for e in tr.events)


def test_event_at_initial_point_is_not_reported():
    tr = integrate(oscillator(), (0.0, np.array([0.0, 1.0])), TIGHT.replace(horizon=4.0),
                   [component_event("zero", 0)])
    np.testing.assert_allclose([e.t for e in tr.events], [math.pi], atol=1e-12)


def test_terminal_event_truncates():
    tr = integrate(oscillator(), (0.0, np.array([1.0, 0.0])), TIGHT,
                   [component_event("zero", 0, terminal=True)])
    assert tr.termination is Termination.EVENT
    assert tr.t_end == pytest.approx(math.pi / 2, abs=1e-12)
    assert tr.ys[-1][0] == pytest.approx(0.0, abs=1e-12)


def test_backward_integration():
    tr = integrate(oscillator(), (0.0, np.array([1.0, 0.0])), TIGHT.replace(horizon=3.0),
                   direction=-1)
    assert tr.ts[0] == -3.0 and tr.ts[-1] == 0.0
    np.testing.assert_allclose(tr.y(-2.0), [math.cos(2.0), math.sin(2.0)], atol=1e-11)


def test_blow_up_detected():
    # y' = y^2 from y(0) = 1 blows up at t = 1
    fld = VectorField(lambda t, y: y * y, None, 1)
    tr = integrate(fld, (0.0, np.array([1.0])), IntegrationConfig(horizon=5.0,
                                                                   blowup_threshold=1e6))
    assert tr.termination is Termination.BLOW_UP
    assert tr.t_end == pytest.approx(1.0 - 1e-6, rel=1e-6)


def test_step_limit():
    tr = integrate(oscillator(), (0.0, np.array([1.0, 0.0])),
                   TIGHT.replace(max_steps=5))
    assert tr.termination is Termination.STEP_LIMIT
    assert tr.n_steps == 5


def test_out_of_range_and_sparse_errors():
    tr = integrate(oscillator(), (0.0, np.array([1.0, 0.0])), TIGHT.replace(horizon=1.0))
    with pytest.raises(ValueError):
        tr.y(1.5)
    sparse = integrate(oscillator(), (0.0, np.array([1.0, 0.0])), TIGHT.replace(horizon=1.0),
                       dense=False)
    np.testing.assert_array_equal(sparse.y(1.0), sparse.ys[-1])
    mid = 0.5 * (sparse.ts[1] + sparse.ts[2])
    with pytest.raises(ValueError):
        sparse.y(mid)


@pytest.mark.parametrize("kwargs", [dict(rel_tol=0.0), dict(abs_tol=1.0), dict(horizon=-1.0),
                                    dict(max_steps=0), dict(max_step=0.0),
                                    dict(blowup_threshold=0.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegrationConfig(**kwargs)


def test_event_spec_validation():
    with pytest.raises(ValueError):
        EventSpec("x", lambda t, y: y[0], direction=2)
    with pytest.raises(ValueError):
        EventSpec("", lambda t, y: y[0])


def test_bad_initial_state():
    with pytest.raises(ValueError):
        integrate(oscillator(), (0.0, np.array([1.0, 0.0, 0.0])))
    with pytest.raises(ValueError):
        integrate(oscillator(), (0.0, np.array([math.nan, 0.0])))
    with pytest.raises(ValueError):
        integrate(oscillator(), (0.0, np.array([1.0, 0.0])), direction=0)


def test_constant_solution_is_exact():
    P = make_params(8)
    tr = integrate(P, PhaseState(0.0, P.a0, 0.0, 0.0, 0.0), TIGHT)
    assert np.all(tr.ys == np.array([8.0, 0.0, 0.0, 0.0]))
    assert tr.energy_drift() == 0.0


def test_homoclinic_short_segment_tracks_closed_form():
    P = make_params(8)
    tr = integrate(P, homoclinic(P, -2.0), TIGHT.replace(horizon=2.0))
    exact = homoclinic(P, 0.0)
    assert evaluate(tr, 0.0).v == pytest.approx(exact.v, abs=1e-9)
    assert abs(tr.energy_samples).max() < 1e-10


def test_rk4_fixed_step_agrees_with_adaptive():
    P = make_params(8)
    init = PhaseState(0.0, 4.0, 0.0, 9.299114982540473, 0.0)
    ev = [component_event("max", 1, 0.0, terminal=True, direction=-1)]
    fixed = integrate_fixed(P, init, 3.0, h=1e-3, events=ev)
    adapt = integrate(P, init, TIGHT, ev)
    assert fixed.termination is Termination.EVENT
    assert fixed.t_end == pytest.approx(adapt.t_end, abs=1e-10)
    np.testing.assert_allclose(fixed.y(0.77), adapt.y(0.77), rtol=1e-9)


def test_rk4_backward_and_blowup():
    tr = integrate_fixed(oscillator(), (0.0, np.array([1.0, 0.0])), 2.0, h=1e-3, direction=-1)
    np.testing.assert_allclose(tr.ys[0], [math.cos(2.0), math.sin(2.0)], atol=1e-11)
    fld = VectorField(lambda t, y: y * y, None, 1)
    tr = integrate_fixed(fld, (0.0, np.array([1.0])), 2.0, h=1e-4, blowup_threshold=1e3)
    assert tr.termination is Termination.BLOW_UP


def test_stiff_failure_carries_trajectory():
    # a pole at t = 1 with an unreachable blow-up threshold collapses the step
    fld = VectorField(lambda t, y: np.array([1.0 / (1.0 - t) ** 3]), None, 1)
    with pytest.raises(StiffFailure) as info:
        integrate(fld, (0.0, np.array([0.0])), IntegrationConfig(horizon=2.0,
                                                                  blowup_threshold=1e300))
    assert info.value.trajectory.t_end < 1.0
