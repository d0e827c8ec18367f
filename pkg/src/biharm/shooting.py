"""Shooting in ``beta = v''(0)`` for the bounded solution with minimum ``a``.

Each shot starts from ``(a, 0, beta, 0)``.  Shots that reach ``v < 0`` belong
to the set S, shots that climb above the trapping radius ``R`` while positive
belong to T.  Both sets are open, ``0`` lies in S and every beta above the
blow-up threshold lies in T, so bisection on the outcome kind closes in on a
parameter in neither set.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import F_potential, PhaseState, energy
from .integrator import (Event, IntegrationConfig, StiffFailure, Termination, Trajectory,
                         component_event, integrate)
from .params import DomainError, ProblemParams

log = logging.getLogger(__name__)

#: classification runs: long horizon, tolerances near the binary64 floor
SHOOTING_CONFIG = IntegrationConfig(rel_tol=1e-13, abs_tol=1e-15, horizon=40.0)

#: the T-side bracket end, as a multiple of beta0
T_SIDE_FACTOR = 1.05


class ShootingError(RuntimeError):
    pass


class BracketFailed(ShootingError):
    pass


class ValidationFailed(ShootingError):
    def __init__(self, message: str, trajectory: Optional[Trajectory] = None):
        super().__init__(message)
        self.trajectory = trajectory


class ShotKind(enum.Enum):
    CROSSED_ZERO = "CrossedZero"
    EXCEEDED_R = "ExceededR"
    BOUNDED_TO_HORIZON = "BoundedToHorizon"
    BLOW_UP = "BlowUp"

    @property
    def side(self) -> Optional[str]:
        if self is ShotKind.CROSSED_ZERO:
            return "S"
        if self in (ShotKind.EXCEEDED_R, ShotKind.BLOW_UP):
            return "T"
        return None


@dataclass(frozen=True)
class ShotOutcome:
    kind: ShotKind
    t: Optional[float]
    beta: float
    R: float
    trajectory: Trajectory = field(repr=False)


@dataclass(frozen=True)
class ShootingResult:
    a: float
    beta_star: float
    bracket: tuple
    bracket_width: float
    outcome_low: ShotKind
    outcome_high: ShotKind
    R: float
    trajectory: Trajectory = field(repr=False)
    history: tuple = field(default=(), repr=False)
    monotonicity_violations: tuple = ()
    screen_minima: tuple = ()


def _check_a(params: ProblemParams, a: float):
    if not 0.0 < a < params.a0:
        raise DomainError(f"minimum value a must satisfy 0 < a < a0={params.a0!r}, got {a!r}")


def trapping_radius(params: ProblemParams, a: float, beta_cap: float,
                    ratio: float = 1.001, inflate: float = 1.1) -> float:
    """Level ``R`` with ``F(v) > beta_cap^2/2 + F(a)`` for every ``v >= R/inflate``.

    Walks a geometric grid up from ``max(a, a0)`` (``F`` increases beyond ``a0``)
    and inflates the first admissible point by ``inflate``.
    """
    _check_a(params, a)
    if beta_cap < params.beta0:
        raise DomainError(f"beta_cap must be >= beta0={params.beta0!r}, got {beta_cap!r}")
    level = 0.5 * beta_cap * beta_cap + F_potential(params, a)
    R = max(a, params.a0)
    while not F_potential(params, R) > level:
        R *= ratio
    return inflate * R


def _shot_events(R: float, a: float, extrema: bool):
    evs = [component_event("zero", 0, 0.0, terminal=True),
           component_event("R", 0, R, terminal=True, direction=1)]
    if extrema:
        evs.append(component_event("extremum", 1))
        evs.append(component_event("half_a", 0, 0.5 * a, direction=-1))
    return evs


def classify_shot(params: ProblemParams, a: float, beta: float,
                  config: Optional[IntegrationConfig] = None, R: Optional[float] = None,
                  extrema: bool = False, dense: bool = True) -> ShotOutcome:
    """Integrate from ``(a, 0, beta, 0)`` and report which terminal condition fires first.

    ``R`` defaults to ``trapping_radius(params, a, 1.05 beta0)``.  With
    ``extrema=True`` the trajectory also records every ``v' = 0`` event and the
    first downward crossing of ``a/2``.
    """
    _check_a(params, a)
    if not beta >= 0.0:
        raise DomainError(f"beta must be >= 0, got {beta!r}")
    config = config or SHOOTING_CONFIG
    if R is None:
        R = trapping_radius(params, a, T_SIDE_FACTOR * params.beta0)
    init = PhaseState(0.0, a, 0.0, beta, 0.0)
    cfg = config
    for _ in range(4):
        traj = integrate(params, init, cfg, _shot_events(R, a, extrema), dense=dense)
        terminal = [e for e in traj.events if e.terminal]
        if len(terminal) < 2:
            break
        # both terminal roots fired in one step; earlier wins unless they tie
        if abs(terminal[0].t - terminal[1].t) > 1e-13:
            break
        cfg = cfg.replace(rel_tol=cfg.rel_tol / 2, abs_tol=cfg.abs_tol / 2)
    if traj.termination is Termination.EVENT:
        ev = next(e for e in traj.events if e.terminal)
        kind = ShotKind.CROSSED_ZERO if ev.kind == "zero" else ShotKind.EXCEEDED_R
        return ShotOutcome(kind, ev.t, beta, R, traj)
    if traj.termination is Termination.BLOW_UP:
        return ShotOutcome(ShotKind.BLOW_UP, traj.t_end, beta, R, traj)
    return ShotOutcome(ShotKind.BOUNDED_TO_HORIZON, None, beta, R, traj)


def _safe_classify(params, a, beta, config, R, extrema=False, dense=True) -> ShotOutcome:
    try:
        return classify_shot(params, a, beta, config, R, extrema, dense)
    except StiffFailure as exc:
        # a collapsing step only happens on the way to blow-up
        traj = exc.trajectory
        if np.max(np.abs(traj.ys[-1])) > 1.0 and traj.ys[-1][0] > R:
            return ShotOutcome(ShotKind.BLOW_UP, traj.t_end, beta, R, traj)
        raise


def periodicity_screen(params: ProblemParams, a: float, R: float, traj: Trajectory,
                       rtol: float = 1e-4) -> list:
    """Local minima of the evenly reflected shot that sit within ``rtol*a0`` of ``a``.

    Only the part of the trajectory before it first leaves ``[a/2, R]`` counts.
    The shot starts at a symmetric minimum, so each forward minimum at ``t``
    has a mirror image at ``-t``.
    """
    t_exit = traj.t_end
    for e in traj.events:
        if e.kind in ("half_a", "zero", "R"):
            t_exit = min(t_exit, e.t)
            break
    forward = [0.0]
    for e in traj.events_of("extremum"):
        if e.t >= t_exit:
            break
        # a minimum has v'' > 0
        if e.y[2] > 0.0 and abs(e.y[0] - a) <= rtol * params.a0:
            forward.append(e.t)
        elif e.y[2] > 0.0:
            break
    mirrored = [-t for t in forward[:0:-1]]
    return mirrored + forward


def find_beta_star(params: ProblemParams, a: float, config: Optional[IntegrationConfig] = None,
                   beta_tol: Optional[float] = None, prescan: int = 8,
                   validate: bool = True) -> ShootingResult:
    """Bisect the S/T boundary in ``beta`` for the bounded solution with minimum ``a``.

    ``beta_tol=None`` bisects until the bracket endpoints are adjacent floats.
    A coarse ``prescan`` grid checks the S/T ordering before bisection; any
    interleaving is logged and kept in ``monotonicity_violations``.

    Raises
    ------
    BracketFailed
        if ``0`` does not classify into S or ``1.05 beta0`` not into T.
    ValidationFailed
        if the resulting shot does not return to ``a`` within ``1e-4 a0`` at
        least once before leaving ``[a/2, R]`` (three minima counting the
        mirrored one).
    """
    _check_a(params, a)
    if beta_tol is not None and not beta_tol > 0.0:
        raise DomainError(f"beta_tol must be positive, got {beta_tol!r}")
    config = config or SHOOTING_CONFIG
    hi = T_SIDE_FACTOR * params.beta0
    R = trapping_radius(params, a, hi)
    lo = 0.0
    history = []

    def shoot(beta):
        out = _safe_classify(params, a, beta, config, R, dense=False)
        history.append((beta, out.kind))
        return out

    out_lo, out_hi = shoot(lo), shoot(hi)
    if out_lo.kind.side != "S":
        raise BracketFailed(f"beta=0 classified {out_lo.kind.value}, expected CrossedZero")
    if out_hi.kind.side != "T":
        raise BracketFailed(f"beta={hi!r} classified {out_hi.kind.value}, expected ExceededR/BlowUp")
    kind_hi = out_hi.kind

    if prescan > 0:
        grid = [lo + (hi - lo) * (i + 1) / (prescan + 1) for i in range(prescan)]
        sides = [shoot(b).kind.side for b in grid]
        # tighten to the last S before the first T
        for b, side in zip(grid, sides):
            if side == "S":
                lo = b
            elif side == "T":
                hi = b
                kind_hi = history[-prescan + grid.index(b)][1]
                break
            else:
                lo = hi = b
                break

    found = None
    while lo < hi:
        if beta_tol is not None and hi - lo <= beta_tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        out = shoot(mid)
        side = out.kind.side
        if side == "S":
            lo = mid
        elif side == "T":
            hi = mid
            kind_hi = out.kind
        else:
            found = mid
            break
    beta_star = found if found is not None else 0.5 * (lo + hi)
    violations = _monotonicity_violations(history)
    if violations:
        log.warning("non-monotone S/T classification for a=%r: %s", a, violations)

    final = _safe_classify(params, a, beta_star, config, R, extrema=True)
    minima = periodicity_screen(params, a, R, final.trajectory)
    result = ShootingResult(
        a=a, beta_star=beta_star, bracket=(lo, hi), bracket_width=hi - lo,
        outcome_low=ShotKind.CROSSED_ZERO,
        outcome_high=kind_hi,
        R=R, trajectory=final.trajectory, history=tuple(history),
        monotonicity_violations=tuple(violations), screen_minima=tuple(minima))
    if validate and len(minima) < 3:
        raise ValidationFailed(
            f"a={a!r}: beta*={beta_star!r} shot shows {len(minima)} minima near a "
            f"before leaving [a/2, R]; need 3", final.trajectory)
    return result


def _monotonicity_violations(history) -> list:
    """Pairs ``(beta_T, beta_S)`` with ``beta_T < beta_S``: T below S breaks the ordering."""
    s_betas = [b for b, k in history if k.side == "S"]
    t_betas = [b for b, k in history if k.side == "T"]
    if not s_betas or not t_betas:
        return []
    max_s = max(s_betas)
    return sorted((bt, max_s) for bt in t_betas if bt < max_s)


def initial_energy(params: ProblemParams, a: float, beta: float) -> float:
    """Energy of the shot ``(a, 0, beta, 0)``; equals ``beta^2/2 + F(a)``."""
    return energy(params, PhaseState(0.0, a, 0.0, beta, 0.0))
