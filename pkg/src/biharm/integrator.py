"""Adaptive and fixed-step integration with dense output and event location.

The adaptive path advances with the Dormand-Prince 8(5,3) pair (scipy's
``DOP853`` stepper, used one step at a time) and keeps each step's 7th-order
interpolant.  Events are sign changes of scalar functionals of the state,
located by Brent's method on that interpolant.  The fixed-step path uses the
classical 4th-order scheme with cubic Hermite interpolation and serves as an
independent discretisation for cross-checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import DOP853
from scipy.optimize import brentq

from .dynamics import PhaseState, make_field
from .params import ProblemParams


class StiffFailure(RuntimeError):
    """Step size collapsed below ``1e-14 (1 + |t|)``; carries the partial trajectory."""

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


class Termination(enum.Enum):
    REACHED_HORIZON = "ReachedHorizon"
    EVENT = "Event"
    BLOW_UP = "BlowUp"
    STEP_LIMIT = "StepLimit"


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    horizon: float = 60.0
    blowup_threshold: float = 1e8
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            x = getattr(self, name)
            if not 0.0 < x <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {x!r}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if not self.blowup_threshold > 0.0:
            raise ValueError(f"blowup_threshold must be positive, got {self.blowup_threshold!r}")
        if not self.max_step > 0.0:
            raise ValueError(f"max_step must be positive, got {self.max_step!r}")
        if int(self.max_steps) != self.max_steps or self.max_steps <= 0:
            raise ValueError(f"max_steps must be a positive integer, got {self.max_steps!r}")

    def replace(self, **changes) -> "IntegrationConfig":
        d = dict(self.__dict__)
        d.update(changes)
        return IntegrationConfig(**d)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class EventSpec:
    """Zero of ``func(t, y)``; ``direction`` +1 fires on increasing crossings only."""

    kind: str
    func: Callable[[float, np.ndarray], float]
    terminal: bool = False
    direction: int = 0

    def __post_init__(self):
        if not callable(self.func):
            raise ValueError(f"event {self.kind!r}: func is not callable")
        if self.direction not in (-1, 0, 1):
            raise ValueError(f"event {self.kind!r}: direction must be -1, 0 or 1")
        if not isinstance(self.kind, str) or not self.kind:
            raise ValueError("event kind must be a non-empty string")


def component_event(kind: str, index: int, level: float = 0.0, terminal: bool = False,
                    direction: int = 0) -> EventSpec:
    """Event ``y[index] = level``."""
    return EventSpec(kind, lambda t, y: y[index] - level, terminal, direction)


@dataclass(frozen=True)
class Event:
    kind: str
    t: float
    y: np.ndarray
    terminal: bool

    @property
    def state(self) -> PhaseState:
        return PhaseState.from_array(self.t, self.y)


@dataclass(frozen=True)
class VectorField:
    """Autonomous system ``y' = rhs(t, y)`` with an optional first integral."""

    rhs: Callable[[float, np.ndarray], np.ndarray]
    energy: Optional[Callable[[np.ndarray], float]]
    dim: int

    @classmethod
    def from_params(cls, params: ProblemParams) -> "VectorField":
        rhs, first_integral = make_field(params)
        return cls(rhs, first_integral, 4)


def _nested_poly(F: np.ndarray, x: float):
    """Value and x-derivative of scipy's DOP853 interpolant minus ``y_old``.

    The interpolant is ``x (F0 + (1-x) (F1 + x (F2 + (1-x)(...))))``.
    """
    val = np.zeros(F.shape[1])
    der = np.zeros(F.shape[1])
    for i, f in enumerate(F[::-1]):
        s = val + f
        if i % 2 == 0:
            val = s * x
            der = der * x + s
        else:
            val = s * (1.0 - x)
            der = der * (1.0 - x) - s
    return val, der


class Trajectory:
    """Dense, event-annotated solution over ``[t_start, t_end]``.

    Step endpoints ``ts`` are stored increasing; ``evaluate`` at an endpoint
    returns the accepted state exactly.
    """

    def __init__(self, field: VectorField, ts, ys, interp, kind: str, events, energies,
                 termination: Termination, params: Optional[ProblemParams] = None,
                 t_start: Optional[float] = None, t_end: Optional[float] = None,
                 e_start: float = 0.0):
        self.field = field
        self.params = params
        self.ts = np.asarray(ts, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self._interp = interp
        self._kind = kind
        self.events: list[Event] = sorted(events, key=lambda e: e.t)
        self.energy_samples = np.asarray(energies, dtype=float)
        self.termination = termination
        self.t_start = float(self.ts[0] if t_start is None else t_start)
        self.t_end = float(self.ts[-1] if t_end is None else t_end)
        self._e_start = e_start

    @property
    def n_steps(self) -> int:
        return len(self.ts) - 1

    def _locate(self, t: float) -> int:
        lo, hi = self.ts[0], self.ts[-1]
        if not lo <= t <= hi:
            raise ValueError(f"t={t!r} outside the covered interval [{lo!r}, {hi!r}]")
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        return min(max(i, 0), len(self.ts) - 2)

    def y(self, t: float) -> np.ndarray:
        """Interpolated state at ``t``."""
        t = float(t)
        i = self._locate(t)
        if t == self.ts[i]:
            return self.ys[i].copy()
        if t == self.ts[i + 1]:
            return self.ys[i + 1].copy()
        return self._eval(i, t)[0]

    def dy(self, t: float) -> np.ndarray:
        """Time derivative of the interpolant at ``t``."""
        t = float(t)
        i = self._locate(t)
        return self._eval(i, t)[1]

    def _eval(self, i: int, t: float):
        if len(self.ts) == 1:
            return self.ys[0].copy(), self.field.rhs(t, self.ys[0])
        if self._kind == "dop853":
            if self._interp[i] is None:
                raise ValueError("trajectory was integrated without dense output at this step")
            t_old, h, y_old, F = self._interp[i]
            x = (t - t_old) / h
            val, der = _nested_poly(F, x)
            return y_old + val, der / h
        # cubic Hermite on [ts[i], ts[i+1]]
        t0, t1 = self.ts[i], self.ts[i + 1]
        y0, y1 = self.ys[i], self.ys[i + 1]
        f0, f1 = self._interp[i], self._interp[i + 1]
        h = t1 - t0
        x = (t - t0) / h
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        val = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        d00 = (6 * x**2 - 6 * x) / h
        d10 = 3 * x**2 - 4 * x + 1
        d01 = (-6 * x**2 + 6 * x) / h
        d11 = 3 * x**2 - 2 * x
        der = d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1
        return val, der

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def energy_drift(self) -> float:
        """Max ``|E - E(t_start)|`` over accepted steps."""
        if self.energy_samples.size == 0:
            return 0.0
        return float(np.max(np.abs(self.energy_samples - self._e_start)))

    def sample(self, t_grid) -> np.ndarray:
        return np.array([self.y(t) for t in t_grid])


def evaluate(traj: Trajectory, t: float) -> PhaseState:
    """Dense-output state of a 4-dimensional trajectory at ``t``."""
    return PhaseState.from_array(t, traj.y(t))


def _as_field(system) -> tuple[VectorField, Optional[ProblemParams]]:
    if isinstance(system, VectorField):
        return system, None
    if isinstance(system, ProblemParams):
        return VectorField.from_params(system), system
    raise TypeError(f"expected ProblemParams or VectorField, got {type(system).__name__}")


def _as_initial(init) -> tuple[float, np.ndarray]:
    if isinstance(init, PhaseState):
        return init.t, init.as_array()
    t0, y0 = init
    y0 = np.asarray(y0, dtype=float)
    if not (math.isfinite(t0) and np.all(np.isfinite(y0))):
        raise ValueError("initial state must be finite")
    return float(t0), y0


class _Recorder:
    """Shared bookkeeping for the adaptive and fixed-step drivers."""

    def __init__(self, field, t0, y0, events, config, direction):
        self.field = field
        self.events = list(events)
        for ev in self.events:
            if not isinstance(ev, EventSpec):
                raise ValueError(f"invalid event spec {ev!r}")
        self.config = config
        self.direction = direction
        self.ts = [t0]
        self.ys = [y0.copy()]
        self.interp = []
        self.fired: list[Event] = []
        self.energies = [field.energy(y0)] if field.energy is not None else []
        self.g_prev = [float(ev.func(t0, y0)) for ev in self.events]
        self.termination = Termination.REACHED_HORIZON

    def _root(self, fun, t_a, t_b):
        tol = 1e-13 * (1.0 + max(abs(t_a), abs(t_b)))
        return brentq(fun, min(t_a, t_b), max(t_a, t_b), xtol=tol, rtol=4 * np.finfo(float).eps,
                      maxiter=200)

    def process_step(self, t_old, t_new, y_new, interp_fn) -> bool:
        """Record one accepted step; returns True when integration must stop."""
        cands = []
        g_new_all = []
        for j, ev in enumerate(self.events):
            g_old = self.g_prev[j]
            g_new = float(ev.func(t_new, y_new))
            g_new_all.append(g_new)
            if g_old == 0.0 or np.sign(g_new) == np.sign(g_old):
                continue
            rising = g_new > g_old
            if ev.direction == 1 and not rising:
                continue
            if ev.direction == -1 and rising:
                continue
            if g_new == 0.0:
                te = t_new
            else:
                te = self._root(lambda s: ev.func(s, interp_fn(s)), t_old, t_new)
            cands.append((te, j))

        thr = self.config.blowup_threshold
        blow_t = None
        if np.max(np.abs(y_new)) > thr:
            blow_t = self._root(lambda s: float(np.max(np.abs(interp_fn(s)))) - thr, t_old, t_new)

        cands.sort(key=lambda c: self.direction * c[0])
        stop_t = None
        for te, j in cands:
            if blow_t is not None and self.direction * (te - blow_t) > 0:
                break
            ev = self.events[j]
            ye = y_new.copy() if te == t_new else interp_fn(te)
            self.fired.append(Event(ev.kind, float(te), ye, ev.terminal))
            if ev.terminal:
                stop_t = te
                self.termination = Termination.EVENT
                break
        if stop_t is None and blow_t is not None:
            stop_t = blow_t
            self.termination = Termination.BLOW_UP

        if stop_t is not None and stop_t != t_new:
            y_stop = interp_fn(stop_t)
            t_new, y_new = float(stop_t), y_stop
        self.ts.append(float(t_new))
        self.ys.append(np.array(y_new, dtype=float))
        if self.field.energy is not None and self.termination is not Termination.BLOW_UP:
            self.energies.append(self.field.energy(y_new))
        self.g_prev = g_new_all
        return stop_t is not None

    def build(self, kind, params, e_start) -> Trajectory:
        ts, ys, interp = self.ts, self.ys, self.interp
        if self.direction < 0:
            ts, ys = ts[::-1], ys[::-1]
            interp = interp[::-1]
        return Trajectory(self.field, ts, ys, interp, kind, self.fired, self.energies,
                          self.termination, params, t_start=self.ts[0], t_end=self.ts[-1],
                          e_start=e_start)


def integrate(system, init, config: Optional[IntegrationConfig] = None,
              events: Sequence[EventSpec] = (), direction: int = 1,
              dense: bool = True) -> Trajectory:
    """Integrate from ``init`` for up to ``config.horizon`` time units.

    ``system`` is a ``ProblemParams`` (the fourth-order problem) or any
    ``VectorField``.  ``init`` is a ``PhaseState`` or a ``(t0, y0)`` pair.
    Stops at the horizon, at the first terminal event, when ``max|y|`` exceeds
    ``blowup_threshold`` or after ``max_steps`` steps.  ``dense=False`` keeps
    interpolants only for steps that contain an event, which is all a
    classification run needs.
    """
    config = config or IntegrationConfig()
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    field, params = _as_field(system)
    t0, y0 = _as_initial(init)
    if y0.shape != (field.dim,):
        raise ValueError(f"initial state has shape {y0.shape}, expected ({field.dim},)")
    rec = _Recorder(field, t0, y0, events, config, direction)
    e_start = rec.energies[0] if rec.energies else 0.0
    t_bound = t0 + direction * config.horizon
    solver = DOP853(field.rhs, t0, y0, t_bound, max_step=config.max_step,
                    rtol=config.rel_tol, atol=config.abs_tol)
    stiff = None
    for _ in range(int(config.max_steps)):
        if solver.status != "running":
            break
        t_old = solver.t
        msg = solver.step()
        if solver.status == "failed":
            stiff = msg or "step size underflow"
            break
        h = abs(solver.t - t_old)
        if h < 1e-14 * (1.0 + abs(solver.t)) and solver.status == "running":
            stiff = f"step size {h:.3e} below 1e-14 (1+|t|) at t={solver.t:.6g}"
            break
        cache = []

        def interp_fn(s, cache=cache):
            if not cache:
                cache.append(solver.dense_output())
            return cache[0](s)

        stop = rec.process_step(t_old, solver.t, solver.y, interp_fn)
        if dense and not cache:
            cache.append(solver.dense_output())
        if cache:
            d = cache[0]
            rec.interp.append((d.t_old, d.h, d.y_old.copy(), d.F.copy()))
        else:
            rec.interp.append(None)
        if stop:
            break
    else:
        if solver.status == "running":
            rec.termination = Termination.STEP_LIMIT
    traj = rec.build("dop853", params, e_start)
    if stiff is not None:
        raise StiffFailure(stiff, traj)
    return traj


def integrate_fixed(system, init, duration: float, h: float = 1e-4,
                    events: Sequence[EventSpec] = (), blowup_threshold: float = 1e8,
                    direction: int = 1) -> Trajectory:
    """Classical RK4 at constant step ``h`` (last step shortened to hit ``duration``)."""
    field, params = _as_field(system)
    t0, y0 = _as_initial(init)
    config = IntegrationConfig(horizon=duration, blowup_threshold=blowup_threshold)
    rec = _Recorder(field, t0, y0, events, config, direction)
    e_start = rec.energies[0] if rec.energies else 0.0
    f = field.rhs
    hh = direction * h
    t_bound = t0 + direction * duration
    n_full = int(math.floor(duration / h + 1e-9))
    t, y = t0, y0.copy()
    fy = f(t, y)
    rec.interp.append(fy)
    i = 0
    while True:
        if i < n_full:
            t_next = t0 + (i + 1) * hh
        elif direction * (t_bound - t) > 1e-15 * (1 + abs(t)):
            t_next = t_bound
        else:
            break
        step = t_next - t
        k1 = fy
        k2 = f(t + step / 2, y + step / 2 * k1)
        k3 = f(t + step / 2, y + step / 2 * k2)
        k4 = f(t + step, y + step * k3)
        y_new = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        f_new = f(t_next, y_new)
        ta, ya, fa = t, y, fy

        def interp(s, ta=ta, tb=t_next, ya=ya, yb=y_new, fa=fa, fb=f_new):
            hs = tb - ta
            x = (s - ta) / hs
            return ((2 * x**3 - 3 * x**2 + 1) * ya + (x**3 - 2 * x**2 + x) * hs * fa
                    + (-2 * x**3 + 3 * x**2) * yb + (x**3 - x**2) * hs * fb)

        stop = rec.process_step(t, t_next, y_new, interp)
        rec.interp.append(f_new if rec.ts[-1] == t_next else f(rec.ts[-1], rec.ys[-1]))
        t, y, fy = t_next, y_new, f_new
        i += 1
        if stop:
            break
    return rec.build("hermite", params, e_start)
