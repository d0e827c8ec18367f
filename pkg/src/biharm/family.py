"""The periodic family ``v_a``: extraction, sweeps, reconstruction and structural checks."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .dynamics import F_potential, PhaseState, energy, homoclinic_derivatives, f_nonlinearity
from .integrator import (IntegrationConfig, Termination, Trajectory, VectorField,
                         component_event, integrate)
from .params import DomainError, ProblemParams
from .shooting import (SHOOTING_CONFIG, ShootingError, ShootingResult, ValidationFailed,
                       find_beta_star)


class PeriodDetectionFailed(ShootingError):
    pass


class QuadratureError(RuntimeError):
    pass


#: tolerance on |L_raw - 2 t_max| / L; see extract_periodic
CROSS_CHECK_RTOL = 1e-5


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.value:.3e} (tol {self.tol:.1e})"


def _check(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol))


@dataclass(frozen=True)
class PeriodicSolution:
    """One member ``v_a`` of the family, stored as its half period ``[0, t_max]``.

    The second half is the mirror image about ``t_max``; values outside
    ``[0, period)`` are reduced modulo the period.
    """

    params: ProblemParams
    a: float
    beta_star: float
    period: float
    energy: float
    t_max: float
    v_max: float
    half: Trajectory = field(repr=False)
    raw_period: float = math.nan
    raw_symmetry_defect: float = math.nan
    checks: tuple = field(default=(), repr=False)

    @property
    def value_range(self) -> tuple:
        return (self.a, self.v_max)

    def _reduce(self, t: float):
        s = math.fmod(t, self.period)
        if s < 0.0:
            s += self.period
        if s <= self.t_max:
            return s, 1.0
        return self.period - s, -1.0

    def state(self, t: float) -> PhaseState:
        s, sign = self._reduce(t)
        y = self.half.y(min(s, self.half.t_end))
        return PhaseState(t, y[0], sign * y[1], y[2], sign * y[3])

    def v(self, t: float) -> float:
        return self.state(t).v

    def derivatives(self, t: float) -> tuple:
        """``(v, v', v'', v''', v'''')``; ``v''''`` is the derivative of the ``v'''`` interpolant."""
        s, sign = self._reduce(t)
        s = min(s, self.half.t_end)
        y = self.half.y(s)
        dy = self.half.dy(s)
        return y[0], sign * y[1], y[2], sign * y[3], dy[3]

    def sample(self, samples: int = 1001) -> tuple:
        """Times and states over one period ``[0, period]``."""
        ts = np.linspace(0.0, self.period, samples)
        states = np.array([self.state(t).as_array() for t in ts])
        return ts, states

    def ascending_slope(self, c: float) -> float:
        """``v'`` where the rising branch ``(0, t_max)`` passes through ``v = c``."""
        if not self.a <= c <= self.v_max:
            raise ValueError(f"c={c!r} outside [{self.a!r}, {self.v_max!r}]")
        if c == self.a:
            return 0.0
        if c == self.v_max:
            return 0.0
        t = brentq(lambda s: self.half.y(s)[0] - c, 0.0, self.half.t_end, xtol=1e-14)
        return float(self.half.y(t)[1])

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class ConstantProfile:
    """The constant solution ``v = a0`` with the same interface as a family member."""

    params: ProblemParams

    @property
    def a(self) -> float:
        return self.params.a0

    @property
    def v_max(self) -> float:
        return self.params.a0

    @property
    def value_range(self) -> tuple:
        return (self.params.a0, self.params.a0)

    @property
    def energy(self) -> float:
        return F_potential(self.params, self.params.a0)

    def derivatives(self, t: float) -> tuple:
        return self.params.a0, 0.0, 0.0, 0.0, 0.0

    def ascending_slope(self, c: float) -> float:
        return 0.0


@dataclass(frozen=True)
class HomoclinicProfile:
    params: ProblemParams
    T: float = 0.0

    def derivatives(self, t: float) -> tuple:
        return homoclinic_derivatives(self.params, t, self.T)


@dataclass(frozen=True)
class FamilyRecord:
    a: float
    beta_star: float
    period: float
    energy: float
    v_max: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _first_extrema(traj: Trajectory):
    """``(t_max, t_min2)`` from the recorded ``v' = 0`` events of a shot from a minimum."""
    t_max = t_min = None
    for e in traj.events_of("extremum"):
        if t_max is None:
            if e.y[2] < 0.0:
                t_max = e.t
            continue
        if e.y[2] > 0.0:
            t_min = e.t
            break
    return t_max, t_min


def extract_periodic(params: ProblemParams, shot: ShootingResult,
                     config: Optional[IntegrationConfig] = None,
                     cross_check_rtol: float = CROSS_CHECK_RTOL,
                     symmetry_tol: float = 1e-7) -> PeriodicSolution:
    """Turn a validated shooting result into a symmetric one-period profile.

    The half period is re-integrated from ``(a, 0, beta*, 0)`` up to the first
    maximum ``t_max``; the second half is its mirror image, so ``L = 2 t_max``.
    The raw shot's own minimum-to-minimum spacing must agree with ``L`` to
    ``cross_check_rtol``.

    Raises
    ------
    PeriodDetectionFailed
        if the raw shot shows no maximum followed by a minimum, or the two
        period measurements disagree.
    ValidationFailed
        if an invariant of the profile fails.
    """
    config = config or SHOOTING_CONFIG
    a, beta = shot.a, shot.beta_star
    raw = shot.trajectory
    t_max_raw, t_min_raw = _first_extrema(raw)
    if t_max_raw is None or t_min_raw is None:
        raise PeriodDetectionFailed(
            f"a={a!r}: fewer than three v'=0 events before the shot departed "
            f"(t_max={t_max_raw}, next minimum={t_min_raw})")

    half = integrate(params, PhaseState(0.0, a, 0.0, beta, 0.0),
                     config.replace(horizon=1.5 * t_max_raw + 1.0),
                     [component_event("maximum", 1, 0.0, terminal=True, direction=-1)])
    if half.termination is not Termination.EVENT:
        raise PeriodDetectionFailed(f"a={a!r}: half-period run ended without reaching a maximum")
    t_max = half.t_end
    period = 2.0 * t_max
    discrepancy = abs(t_min_raw - period) / period
    if discrepancy > cross_check_rtol:
        raise PeriodDetectionFailed(
            f"a={a!r}: reflected period {period!r} and raw minimum spacing {t_min_raw!r} "
            f"differ by {discrepancy:.2e} relative (> {cross_check_rtol:.0e})")

    y_top = half.ys[-1]
    E = energy(params, PhaseState(0.0, a, 0.0, beta, 0.0))
    # raw continuation past the maximum vs the mirrored rising branch, first quarter period
    ss = np.linspace(0.0, 0.5 * t_max_raw, 201)
    raw_defect = max(abs(raw.y(t_max_raw + s)[0] - raw.y(t_max_raw - s)[0]) for s in ss)
    sol = PeriodicSolution(params=params, a=a, beta_star=beta, period=period, energy=E,
                           t_max=t_max, v_max=float(y_top[0]), half=half,
                           raw_period=t_min_raw, raw_symmetry_defect=raw_defect)
    checks = periodic_invariants(sol, symmetry_tol=symmetry_tol)
    sol = PeriodicSolution(**{**sol.__dict__, "checks": tuple(checks)})
    failed = [c for c in checks if not c.passed]
    if failed:
        raise ValidationFailed(
            f"a={a!r}: invariant check failed: " + "; ".join(c.line() for c in failed), half)
    return sol


def periodic_invariants(sol: PeriodicSolution, symmetry_tol: float = 1e-7,
                        energy_rtol: float = 1e-7, samples: int = 401) -> list:
    """Evaluate the structural invariants of one family member."""
    P = sol.params
    a0 = P.a0
    half = sol.half
    out = []
    y0 = half.ys[0]
    yt = half.ys[-1]
    out.append(_check("v'(0) = 0", abs(y0[1]), 0.0))
    out.append(_check("v''(0) > 0", -y0[2], -1e-300 if y0[2] > 0 else 0.0))
    out.append(_check("v'(t_max) = 0", abs(yt[1]), 1e-10 * (1.0 + abs(yt[2]))))
    out.append(Check("v''(t_max) < 0", float(yt[2]), 0.0, bool(yt[2] < 0.0)))
    interior = half.ys[1:-1]
    # strictly rising on (0, t_max): no further zero of v'
    min_slope = float(interior[:, 1].min()) if len(interior) else 1.0
    out.append(Check("v' > 0 on (0, t_max)", min_slope, 0.0, min_slope > 0.0))
    min_v = float(interior[:, 0].min()) if len(interior) else sol.v_max
    out.append(Check("v > a on (0, L)", min_v - sol.a, 0.0, min_v > sol.a))
    out.append(Check("a <= a0", sol.a - a0, 0.0, sol.a <= a0))
    ts = np.linspace(0.0, sol.t_max, samples)
    mirror_max = max(abs(sol.v(sol.t_max + s) - sol.v(sol.t_max - s)) for s in ts)
    mirror_min = max(abs(sol.v(s) - sol.v(-s)) for s in ts)
    out.append(_check("symmetry about t_max", mirror_max, symmetry_tol * a0))
    out.append(_check("symmetry about t=0", mirror_min, symmetry_tol * a0))
    out.append(_check("raw continuation symmetry (quarter period)", sol.raw_symmetry_defect,
                      symmetry_tol * a0))
    drift = half.energy_drift()
    out.append(_check("energy drift", drift, energy_rtol * (1.0 + abs(sol.energy))))
    return out


def solve_member(params: ProblemParams, a: float, config: Optional[IntegrationConfig] = None,
                 beta_tol: Optional[float] = None) -> PeriodicSolution:
    """``find_beta_star`` followed by ``extract_periodic``."""
    shot = find_beta_star(params, a, config, beta_tol)
    return extract_periodic(params, shot, config)


def _sweep_row(args):
    params, a, config = args
    try:
        sol = solve_member(params, a, config)
        return FamilyRecord(a, sol.beta_star, sol.period, sol.energy, sol.v_max)
    except (ShootingError, DomainError) as exc:
        nan = math.nan
        return FamilyRecord(a, nan, nan, nan, nan, status=f"{type(exc).__name__}: {exc}")


def sweep_family(params: ProblemParams, a_values: Sequence[float],
                 config: Optional[IntegrationConfig] = None,
                 workers: Optional[int] = None) -> list:
    """One ``FamilyRecord`` per ``a``, sorted by ``a``; failed rows carry a status message.

    ``workers`` defaults to ``$BIHARM_THREADS`` or the CPU count.  Rows are
    independent and deterministic, so the order of completion does not matter.
    """
    a_sorted = sorted(float(a) for a in a_values)
    for a in a_sorted:
        if not 0.0 < a < params.a0:
            raise DomainError(f"sweep value a={a!r} outside (0, a0={params.a0!r})")
    if workers is None:
        workers = int(os.environ.get("BIHARM_THREADS", os.cpu_count() or 1))
    jobs = [(params, a, config) for a in a_sorted]
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_row(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_sweep_row, jobs))


def reconstruct_u(params: ProblemParams, sol, L: float, r: float) -> float:
    """``u(r) = r^{-(n-4)/2} v_a(ln r + L)`` using the periodic extension of the profile."""
    if not r > 0.0:
        raise DomainError(f"radius must be positive, got {r!r}")
    k = params.decay_exponent
    return r ** (-k) * sol.derivatives(math.log(r) + L)[0]


def _radial_laplacian_coeffs(m: float, n: int):
    """``Delta(r^m g(ln r)) = r^{m-2} (g'' + c1 g' + c0 g)``."""
    return 2.0 * m + n - 2.0, m * (m + n - 2.0)


def biharmonic_residual(params: ProblemParams, sol, L: float, r_grid) -> float:
    """Max over ``r_grid`` of ``|Delta^2 u - u^p|`` relative to the size of its terms.

    The scale is the largest of ``|Delta^2 u|``, ``u^p`` and
    ``r^{-(n+4)/2} (|v| + A |v| + B |v|)``.

    ``Delta^2 u`` is built from the four ``v``-derivatives of the profile by
    applying the radial Laplacian to ``r^m g(ln r)`` twice.
    """
    n = params.n
    if n is None:
        raise DomainError("the biharmonic residual needs a dimension n")
    m1 = -params.decay_exponent
    m2 = m1 - 2.0
    b1, b0 = _radial_laplacian_coeffs(m1, n)
    c1, c0 = _radial_laplacian_coeffs(m2, n)
    worst = 0.0
    for r in r_grid:
        if not r > 0.0:
            raise DomainError(f"radius must be positive, got {r!r}")
        v, v1, v2, v3, v4 = sol.derivatives(math.log(r) + L)
        h = v2 + b1 * v1 + b0 * v
        h1 = v3 + b1 * v2 + b0 * v1
        h2 = v4 + b1 * v3 + b0 * v2
        w = r ** (m2 - 2.0)
        bilap = w * (h2 + c1 * h1 + c0 * h)
        u = r ** m1 * v
        rhs = abs(u) ** params.p
        # the linear terms cancel where v is small, so scale by their size too
        terms = w * (abs(v4) + params.A * abs(v2) + params.B * abs(v))
        scale = max(abs(bilap), rhs, terms)
        if scale > 0.0:
            worst = max(worst, abs(bilap - rhs) / scale)
    return worst


@dataclass(frozen=True)
class SecondOrderResult:
    n: int
    a2: float
    period_pipeline: float
    period_quadrature: float
    v_max: float
    energy: float
    trajectory: Trajectory = field(repr=False)

    @property
    def relative_gap(self) -> float:
        return abs(self.period_pipeline - self.period_quadrature) / self.period_quadrature


def second_order_constant(n: int) -> float:
    """Positive constant solution ``((n-2)/2)^{(n-2)/2}`` of the second-order equation."""
    return ((n - 2) / 2.0) ** ((n - 2) / 2.0)


def second_order_field(n: int) -> VectorField:
    """``v'' = (n-2)^2/4 v - |v|^{4/(n-2)} v`` with energy ``v'^2/2 + U(v)``."""
    c = (n - 2) ** 2 / 4.0
    q = (n + 2) / (n - 2)

    def rhs(t, y):
        v = float(y[0])
        return np.array([y[1], c * v - abs(v) ** (q - 1.0) * v])

    def first_integral(y):
        return 0.5 * float(y[1]) ** 2 + second_order_potential(n, float(y[0]))

    return VectorField(rhs, first_integral, 2)


def second_order_potential(n: int, v: float) -> float:
    """``U(v) = -(n-2)^2 v^2/8 + ((n-2)/(2n)) |v|^{2n/(n-2)}``."""
    return -((n - 2) ** 2) * v * v / 8.0 + (n - 2) / (2.0 * n) * abs(v) ** (2.0 * n / (n - 2))


def second_order_linear_period(n: int) -> float:
    """Small-oscillation period about the constant: ``2 pi / sqrt(n-2)``."""
    return 2.0 * math.pi / math.sqrt(n - 2.0)


def second_order_homoclinic_peak(n: int) -> float:
    """Peak of ``c_n' (2 cosh t)^{-(n-2)/2}`` with ``c_n' = (n(n-2))^{(n-2)/4}``."""
    return (n * (n - 2.0)) ** ((n - 2) / 4.0) * 2.0 ** (-(n - 2) / 2.0)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _second_order_dU(n: int, s):
    """``U'(s) = -(n-2)^2 s/4 + s^{(n+2)/(n-2)}`` for ``s > 0``."""
    return -((n - 2) ** 2) * s / 4.0 + s ** ((n + 2) / (n - 2))


def _second_order_d2U(n: int, s):
    q = (n + 2) / (n - 2)
    return -((n - 2) ** 2) / 4.0 + q * s ** (q - 1.0)


def _first_divided_difference(n: int, x0: float, x1: float) -> float:
    """``U[x0, x1] = int_0^1 U'(x0 + t (x1 - x0)) dt``."""
    return float(_GL_W @ _second_order_dU(n, x0 + _GL_X * (x1 - x0)))


def _second_divided_difference(n: int, x0: float, x1: float, x2: float) -> float:
    """``U[x0, x1, x2]`` as the simplex integral of ``U''`` (Hermite-Genocchi)."""
    u = _GL_X[:, None]
    w = _GL_X[None, :]
    # (t1, t2) = (u, (1 - u) w) maps the unit square onto the simplex
    s = x0 + u * (x1 - x0) + (1.0 - u) * w * (x2 - x0)
    vals = _second_order_d2U(n, s) * (1.0 - u)
    return float(_GL_W @ vals @ _GL_W)


def second_order_quadrature_period(n: int, a2: float) -> tuple:
    """``(period, v_max)`` from ``2 int dv / sqrt(2 (E - U(v)))`` between the turning points.

    With ``E = U(a2) = U(v_max)``, Newton's form gives
    ``E - U(v) = (v - a2)(v_max - v) U[a2, v, v_max]``, and the substitution
    ``v = a2 + w (1 - cos th)/2`` turns the period into
    ``2 int_0^pi dth / sqrt(2 U[a2, v, v_max])``: a smooth integrand with no
    cancellation near the turning points.  ``v_max`` is the root of
    ``U[a2, v]`` above the constant.
    """
    c2 = second_order_constant(n)
    g = lambda v: _first_divided_difference(n, a2, v)
    hi = 2.0 * c2
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise QuadratureError(f"no upper turning point for a2={a2!r}")
    try:
        v_max = brentq(g, c2, hi, xtol=1e-15, rtol=1e-15)
    except ValueError as exc:
        raise QuadratureError(f"turning points not bracketed for a2={a2!r}: {exc}") from exc
    width = v_max - a2

    def integrand(th):
        v = a2 + 0.5 * width * (1.0 - math.cos(th))
        G = _second_divided_difference(n, a2, v, v_max)
        if not G > 0.0:
            raise QuadratureError(f"E - U(v) not positive inside ({a2!r}, {v_max!r})")
        return 1.0 / math.sqrt(2.0 * G)

    with warnings.catch_warnings():
        # roundoff warnings are judged by the error estimate below
        warnings.simplefilter("ignore", IntegrationWarning)
        half, err = quad(integrand, 0.0, math.pi, epsabs=0.0, epsrel=1e-13, limit=200)
    if not err <= 1e-8 * half:
        raise QuadratureError(f"quadrature error estimate {err:.2e} too large for a2={a2!r}")
    return 2.0 * half, v_max


def second_order_oracle(n: int, a2: float, config: Optional[IntegrationConfig] = None,
                        rtol: float = 1e-7) -> SecondOrderResult:
    """Period of the second-order periodic orbit with minimum ``a2``, computed twice.

    (1) integrate from ``(a2, 0)`` with the same event machinery and stop at
    the next minimum; (2) the exact quadrature between the turning points.
    Raises ``QuadratureError`` when they disagree by more than ``rtol``.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 3:
        raise DomainError(f"n must be an integer >= 3, got {n!r}")
    c2 = second_order_constant(n)
    if not 0.0 < a2 < c2:
        raise DomainError(f"a2 must lie in (0, {c2!r}), got {a2!r}")
    config = config or IntegrationConfig(rel_tol=1e-12, abs_tol=1e-14, horizon=1e3)
    fld = second_order_field(n)
    traj = integrate(fld, (0.0, np.array([a2, 0.0])), config,
                     [component_event("maximum", 1, 0.0, direction=-1),
                      component_event("minimum", 1, 0.0, terminal=True, direction=1)])
    if traj.termination is not Termination.EVENT:
        raise QuadratureError(f"pipeline found no returning minimum for a2={a2!r}")
    period_pipe = traj.t_end
    period_quad, v_max = second_order_quadrature_period(n, a2)
    res = SecondOrderResult(n, a2, period_pipe, period_quad, v_max,
                            second_order_potential(n, a2), traj)
    if res.relative_gap > rtol:
        raise QuadratureError(
            f"pipeline period {period_pipe!r} vs quadrature {period_quad!r}: "
            f"relative gap {res.relative_gap:.2e} > {rtol:.0e}")
    return res


@dataclass(frozen=True)
class OrderingReport:
    samples: tuple
    vacuous: bool
    passed: bool


def check_energy_ordering(params: ProblemParams, sol1, sol2, samples: int = 20) -> OrderingReport:
    """Compare rising-branch slopes and energies at common values ``c``.

    At every sampled ``c`` in the interior of the overlap of the two value
    ranges, the member with the strictly larger ``v'`` must have the strictly
    larger energy; equal slopes require equal energies.
    """
    lo = max(sol1.value_range[0], sol2.value_range[0])
    hi = min(sol1.value_range[1], sol2.value_range[1])
    if lo > hi:
        return OrderingReport((), vacuous=True, passed=True)
    if lo == hi:
        cs = [lo]
    else:
        cs = [lo + (hi - lo) * (i + 1) / (samples + 1) for i in range(samples)]
    E1, E2 = sol1.energy, sol2.energy
    rows = []
    ok = True
    for c in cs:
        d1, d2 = sol1.ascending_slope(c), sol2.ascending_slope(c)
        if d1 > d2:
            good = E1 > E2
        elif d2 > d1:
            good = E2 > E1
        else:
            good = E1 == E2
        rows.append((c, d1, d2, E1, E2, good))
        ok &= good
    vacuous = all(r[1] == r[2] for r in rows)
    return OrderingReport(tuple(rows), vacuous=vacuous, passed=ok)


@dataclass(frozen=True)
class PhaseCurveReport:
    simple: bool
    intersections: tuple
    n_segments: int


def phase_curve(sol: PeriodicSolution, samples: int = 2001) -> np.ndarray:
    """Closed ``(v, v')`` polyline over one period (last point equals the first)."""
    _, states = sol.sample(samples)
    return states[:, :2]


def polyline_self_intersections(points: np.ndarray, closed: bool = True) -> list:
    """Index pairs ``(i, j)`` of non-adjacent segments that intersect."""
    P = np.asarray(points, dtype=float)
    A, B = P[:-1], P[1:]
    n = len(A)
    D = B - A
    hits = []
    for i in range(n - 2):
        j0 = i + 2
        j1 = n - 1 if (closed and i == 0) else n
        if j0 >= j1:
            continue
        a, d = A[i], D[i]
        C, E = A[j0:j1], D[j0:j1]
        denom = d[0] * E[:, 1] - d[1] * E[:, 0]
        w = C - a
        s_num = w[:, 0] * E[:, 1] - w[:, 1] * E[:, 0]
        u_num = w[:, 0] * d[1] - w[:, 1] * d[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = s_num / denom
            u = u_num / denom
        mask = (denom != 0.0) & (s >= 0.0) & (s <= 1.0) & (u >= 0.0) & (u <= 1.0)
        for k in np.nonzero(mask)[0]:
            hits.append((i, j0 + int(k)))
    return hits


def check_phase_curve_simple(sol, samples: int = 2001) -> PhaseCurveReport:
    """Whether the one-period ``(v, v')`` curve is a simple closed curve.

    ``sol`` is a ``PeriodicSolution`` or an ``(N, 2)`` array of closed-curve points.
    """
    pts = phase_curve(sol, samples) if isinstance(sol, PeriodicSolution) else np.asarray(sol)
    hits = polyline_self_intersections(pts, closed=True)
    return PhaseCurveReport(simple=not hits, intersections=tuple(hits), n_segments=len(pts) - 1)


def stabilized_run(params: ProblemParams, sol: PeriodicSolution, horizon: float = 40.0,
                   config: Optional[IntegrationConfig] = None) -> tuple:
    """Integrate ``sol`` over ``horizon`` restarting from ``(a, 0, beta*, 0)`` each period.

    The raw orbit is unstable, so a single long integration leaves it after a
    few periods; restarting at each minimum keeps the run on the orbit.
    Returns ``(trajectories, max |E - E0|)``.
    """
    config = config or SHOOTING_CONFIG
    E0 = sol.energy
    trajs = []
    t = 0.0
    worst = 0.0
    while t < horizon - 1e-12:
        dur = min(sol.period, horizon - t)
        tr = integrate(params, PhaseState(t, sol.a, 0.0, sol.beta_star, 0.0),
                       config.replace(horizon=dur), dense=False)
        worst = max(worst, float(np.max(np.abs(tr.energy_samples - E0))))
        trajs.append(tr)
        t += dur
    return trajs, worst


def homoclinic_limit_deviation(params: ProblemParams, sol: PeriodicSolution,
                               window: float = 3.0, samples: int = 601) -> float:
    """``max_{|t| <= window} |v_a(t + L_a/2) - c_n (2 cosh t)^{-(n-4)/2}|``."""
    ts = np.linspace(-window, window, samples)
    return max(abs(sol.v(sol.t_max + t) - homoclinic_derivatives(params, t)[0]) for t in ts)


def energy_inequality_gap(params: ProblemParams, sol, ts) -> float:
    """``min_t E - (v''^2/2 + F(v))``; non-negative when the inequality holds."""
    worst = math.inf
    for t in ts:
        v, v1, v2, v3, _ = sol.derivatives(t)
        E = -v3 * v1 + 0.5 * v2 * v2 + 0.5 * params.A * v1 * v1 + F_potential(params, v)
        worst = min(worst, E - (0.5 * v2 * v2 + F_potential(params, v)))
    return worst
