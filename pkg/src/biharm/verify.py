"""Line-per-check verification suites over the structural properties of the family."""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional

import numpy as np

from .dynamics import PhaseState, energy, homoclinic, homoclinic_derivatives, relative_ode_residual
from .family import (Check, ConstantProfile, HomoclinicProfile, PeriodicSolution,
                     _check, biharmonic_residual, check_energy_ordering,
                     check_phase_curve_simple, energy_inequality_gap, phase_curve,
                     second_order_constant, second_order_field, second_order_oracle,
                     solve_member, stabilized_run)
from .integrator import IntegrationConfig, integrate
from .params import DomainError, ProblemParams
from .shooting import SHOOTING_CONFIG

SUITES = ("energy", "symmetry", "ordering", "phase", "homoclinic", "oracle")

#: members used by the suites, as fractions of a0
MEMBER_FRACTIONS = (0.5, 0.7, 0.9)


class MemberCache:
    """Family members computed on demand and reused across suites."""

    def __init__(self, params: ProblemParams, config: Optional[IntegrationConfig] = None):
        self.params = params
        self.config = config
        self._store: Dict[float, PeriodicSolution] = {}

    def get(self, a: float) -> PeriodicSolution:
        if a not in self._store:
            self._store[a] = solve_member(self.params, a, self.config)
        return self._store[a]

    def fractions(self, fracs=MEMBER_FRACTIONS) -> List[PeriodicSolution]:
        return [self.get(f * self.params.a0) for f in fracs]


def segmented_run(params: ProblemParams, state_at: Callable, t0: float, t1: float,
                  segment: float = 2.0, config: Optional[IntegrationConfig] = None) -> float:
    """Max ``|E(t) - E(t0)|`` over ``[t0, t1]``, restarting from ``state_at(t)`` every ``segment``.

    The constant and the homoclinic sit on saddle manifolds, so one long run
    leaves them by rounding alone; short restarted segments measure the
    integrator's drift without that amplification.
    """
    config = config or SHOOTING_CONFIG
    E0 = energy(params, state_at(t0))
    worst = 0.0
    t = t0
    while t < t1 - 1e-12:
        dur = min(segment, t1 - t)
        tr = integrate(params, state_at(t), config.replace(horizon=dur), dense=False)
        worst = max(worst, float(np.max(np.abs(tr.energy_samples - E0))))
        t += dur
    return worst


def constant_state(params: ProblemParams) -> Callable:
    return lambda t: PhaseState(t, params.a0, 0.0, 0.0, 0.0)


def homoclinic_state(params: ProblemParams) -> Callable:
    return lambda t: homoclinic(params, t)


def suite_energy(params: ProblemParams, cache: MemberCache, horizon: float = 40.0) -> List[Check]:
    out = []
    a0 = params.a0
    E = energy(params, PhaseState(0.0, a0, 0.0, 0.0, 0.0))
    out.append(_check("energy drift, constant a0 (segmented, 40 units)",
                      segmented_run(params, constant_state(params), 0.0, horizon),
                      1e-7 * (1 + abs(E))))
    if params.n is not None:
        out.append(_check("energy drift, homoclinic (segmented, 40 units)",
                          segmented_run(params, homoclinic_state(params),
                                        -0.5 * horizon, 0.5 * horizon), 1e-7))
    for sol in cache.fractions():
        _, drift = stabilized_run(params, sol, horizon)
        out.append(_check(f"energy drift, periodic a={sol.a:.6g} (40 units)", drift,
                          1e-7 * (1 + abs(sol.energy))))
        ts = np.linspace(0.0, sol.period, 401)
        gap = energy_inequality_gap(params, sol, ts)
        out.append(_check(f"energy inequality, a={sol.a:.6g}", -gap, 1e-7 * (1 + abs(sol.energy))))
    return out


def suite_symmetry(params: ProblemParams, cache: MemberCache) -> List[Check]:
    out = []
    for sol in cache.fractions():
        for c in sol.checks:
            out.append(Check(f"a={sol.a:.6g}: {c.name}", c.value, c.tol, c.passed))
        out.append(_check(f"a={sol.a:.6g}: min v <= a0", sol.a - params.a0, 1e-8))
    return out


def suite_ordering(params: ProblemParams, cache: MemberCache) -> List[Check]:
    out = []
    sols = [cache.get(0.5 * params.a0), cache.get(0.75 * params.a0)]
    rep = check_energy_ordering(params, sols[0], sols[1])
    bad = sum(not r[-1] for r in rep.samples)
    out.append(Check(f"ordering a={sols[0].a:.6g} vs a={sols[1].a:.6g} "
                     f"({len(rep.samples)} values)", float(bad), 0.0, rep.passed and not rep.vacuous))
    same = check_energy_ordering(params, sols[0], sols[0])
    out.append(Check("ordering of a member with itself (vacuous)", 0.0, 0.0,
                     same.passed and same.vacuous))
    const = check_energy_ordering(params, ConstantProfile(params), sols[1])
    out.append(Check("constant a0 below periodic energy", float(not const.passed), 0.0,
                     const.passed))
    return out


def twisted_phase_curve(sol: PeriodicSolution, samples: int = 2001) -> np.ndarray:
    """Negative control: ``v'`` flipped by ``cos(2 pi s / L)``, which forces a crossing."""
    pts = phase_curve(sol, samples).copy()
    pts[:, 1] *= np.cos(2.0 * np.pi * np.linspace(0.0, 1.0, len(pts)))
    return pts


def suite_phase(params: ProblemParams, cache: MemberCache) -> List[Check]:
    out = []
    sols = cache.fractions()
    for sol in sols:
        rep = check_phase_curve_simple(sol)
        out.append(Check(f"phase curve simple, a={sol.a:.6g}", float(len(rep.intersections)),
                         0.0, rep.simple))
    rep = check_phase_curve_simple(twisted_phase_curve(sols[0]))
    out.append(Check("negative control rejected", float(len(rep.intersections)), math.inf,
                     not rep.simple))
    return out


def suite_homoclinic(params: ProblemParams, cache: MemberCache) -> List[Check]:
    if params.n is None:
        raise DomainError("the homoclinic suite needs a dimension n")
    ts = np.linspace(-10.0, 10.0, 2001)
    res = 0.0
    en = 0.0
    for t in ts:
        v, v1, v2, v3, v4 = homoclinic_derivatives(params, t)
        res = max(res, relative_ode_residual(params, v, v2, v4))
        en = max(en, abs(energy(params, PhaseState(t, v, v1, v2, v3))))
    peak = params.cn * 2.0 ** (-params.decay_exponent)
    out = [_check("homoclinic ODE residual on [-10, 10]", res, 1e-9),
           _check("homoclinic energy on [-10, 10]", en, 1e-10),
           _check(f"homoclinic peak c_n 2^(-(n-4)/2) = {peak:.12g}",
                  abs(homoclinic_derivatives(params, 0.0)[0] - peak), 1e-12 * params.cn)]
    rgrid = np.geomspace(1e-3, 10.0, 400)
    out.append(_check("homoclinic biharmonic residual", biharmonic_residual(
        params, HomoclinicProfile(params), 0.0, rgrid), 1e-8))
    out.append(_check("constant biharmonic residual", biharmonic_residual(
        params, ConstantProfile(params), 0.0, rgrid), 1e-8))
    return out


def suite_oracle(params: ProblemParams, cache: MemberCache, amplitudes: int = 10) -> List[Check]:
    if params.n is None:
        raise DomainError("the second-order oracle needs a dimension n")
    n = params.n
    c2 = second_order_constant(n)
    out = []
    for frac in np.linspace(0.05, 0.95, amplitudes):
        r = second_order_oracle(n, float(frac * c2), rtol=math.inf)
        out.append(_check(f"second-order period a2={frac:.2f}*c: pipeline {r.period_pipeline:.12g}"
                          f" vs quadrature {r.period_quadrature:.12g}", r.relative_gap, 1e-7))
    tr = integrate(second_order_field(n), (0.0, np.array([c2, 0.0])),
                   IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14, horizon=40.0), dense=False)
    out.append(_check(f"second-order constant {c2:.7f} is a fixed point",
                      float(np.max(np.abs(tr.ys[:, 0] - c2))), 1e-12))
    return out


SUITE_FUNCS: Dict[str, Callable] = {
    "energy": suite_energy,
    "symmetry": suite_symmetry,
    "ordering": suite_ordering,
    "phase": suite_phase,
    "homoclinic": suite_homoclinic,
    "oracle": suite_oracle,
}


def run_suites(params: ProblemParams, names, config: Optional[IntegrationConfig] = None) -> list:
    """``[(suite, Check), ...]`` for the requested suites (``"all"`` expands to every suite)."""
    if isinstance(names, str):
        names = [names]
    expanded = []
    for name in names:
        if name == "all":
            expanded.extend(SUITES)
        elif name in SUITE_FUNCS:
            expanded.append(name)
        else:
            raise DomainError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    cache = MemberCache(params, config)
    results = []
    for name in expanded:
        for c in SUITE_FUNCS[name](params, cache):
            results.append((name, c))
    return results
