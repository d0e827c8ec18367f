"""Vector field, potential and first integral of ``v'''' - A v'' - f(v) = 0``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DomainError, ProblemParams


@dataclass(frozen=True)
class PhaseState:
    """State ``(v, v', v'', v''')`` at logarithmic radius ``t``."""

    t: float
    v: float
    v1: float
    v2: float
    v3: float

    def __post_init__(self):
        for name in ("t", "v", "v1", "v2", "v3"):
            x = getattr(self, name)
            if not math.isfinite(x):
                raise ValueError(f"PhaseState.{name} is not finite: {x!r}")

    @classmethod
    def from_array(cls, t: float, y) -> "PhaseState":
        return cls(float(t), float(y[0]), float(y[1]), float(y[2]), float(y[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.v1, self.v2, self.v3])

    def reflected(self) -> "PhaseState":
        """State of ``w(s) = v(2t - s)`` at the same time (odd derivatives flip)."""
        return PhaseState(self.t, self.v, -self.v1, self.v2, -self.v3)


def _power_term(params: ProblemParams):
    """Return ``g(v) = |v|^{p-1} v`` using an integer power when ``p`` is integral."""
    k = params.p_int
    p = params.p
    if k is not None:
        if k % 2 == 1:
            return lambda v: v**k
        return lambda v: abs(v) ** (k - 1) * v
    return lambda v: abs(v) ** (p - 1.0) * v


def f_nonlinearity(params: ProblemParams, v: float) -> float:
    """``f(v) = |v|^{p-1} v - B v``."""
    return _power_term(params)(v) - params.B * v


def F_potential(params: ProblemParams, v: float) -> float:
    """``F(v) = |v|^{p+1}/(p+1) - (B/2) v^2``, the primitive of ``f`` with ``F(0) = 0``."""
    p = params.p
    k = params.p_int
    av = abs(v)
    head = av ** (k + 1) if k is not None else av ** (p + 1.0)
    return head / (p + 1.0) - 0.5 * params.B * v * v


def rhs(params: ProblemParams, s: PhaseState) -> np.ndarray:
    """First-order system ``(v', v'', v''', A v'' + f(v))``."""
    return np.array([s.v1, s.v2, s.v3, params.A * s.v2 + f_nonlinearity(params, s.v)])


def energy(params: ProblemParams, s: PhaseState) -> float:
    """Conserved quantity ``-v''' v' + v''^2/2 + (A/2) v'^2 + F(v)``."""
    return (
        -s.v3 * s.v1
        + 0.5 * s.v2 * s.v2
        + 0.5 * params.A * s.v1 * s.v1
        + F_potential(params, s.v)
    )


def make_field(params: ProblemParams):
    """Fast ``(rhs(t, y), energy(y))`` closures on raw arrays for the integrator."""
    g = _power_term(params)
    A, B, p = params.A, params.B, params.p

    def field(t, y):
        v = float(y[0])
        return np.array([y[1], y[2], y[3], A * y[2] + g(v) - B * v])

    def first_integral(y):
        v, v1, v2, v3 = (float(c) for c in y)
        return -v3 * v1 + 0.5 * v2 * v2 + 0.5 * A * v1 * v1 + abs(v) ** (p + 1.0) / (p + 1.0) - 0.5 * B * v * v

    return field, first_integral


def linearized_frequency_at_a0(params: ProblemParams) -> float:
    """Angular frequency of small oscillations about the constant solution ``a0``.

    Linearising with ``f'(a0) = (p-1) B`` gives ``w'''' - A w'' - (p-1) B w = 0``
    whose oscillatory pair is ``exp(+-i omega t)`` with
    ``omega^2 = (sqrt(A^2 + 4(p-1)B) - A)/2``.
    """
    A, B, p = params.A, params.B, params.p
    c = 4.0 * (p - 1.0) * B
    # (sqrt(A^2+c) - A)/2 rewritten without cancellation
    omega2 = 0.5 * c / (math.sqrt(A * A + c) + A)
    return math.sqrt(omega2)


def homoclinic_derivatives(params: ProblemParams, t: float, T: float = 0.0) -> tuple:
    """``(v, v', v'', v''', v'''')`` of ``c_n (2 cosh(t-T))^{-(n-4)/2}``.

    With ``k = (n-4)/2`` and ``tau = tanh(t-T)`` the derivatives are
    ``v' = -k tau v``, ``v'' = v(-k + k(k+1) tau^2)``,
    ``v''' = v tau (k(3k+2) - k(k+1)(k+2) tau^2)`` and ``v''''`` follows by one
    more differentiation.
    """
    if params.n is None or params.cn is None:
        raise DomainError("the closed-form homoclinic needs params built by make_params(n)")
    k = params.decay_exponent
    s = t - T
    tau = math.tanh(s)
    # (2 cosh s)^{-k} computed in log form to stay finite for large |s|
    a = abs(s)
    log_2cosh = a + math.log1p(math.exp(-2.0 * a))
    v = params.cn * math.exp(-k * log_2cosh)
    t2 = tau * tau
    alpha = k * (3.0 * k + 2.0)
    gamma = k * (k + 1.0) * (k + 2.0)
    v1 = -k * tau * v
    v2 = v * (-k + k * (k + 1.0) * t2)
    q = tau * (alpha - gamma * t2)
    v3 = v * q
    v4 = v * (-k * tau * q + (alpha - 3.0 * gamma * t2) * (1.0 - t2))
    return v, v1, v2, v3, v4


def homoclinic(params: ProblemParams, t: float, T: float = 0.0) -> PhaseState:
    """Phase state of the positive homoclinic orbit centred at ``T``."""
    v, v1, v2, v3, _ = homoclinic_derivatives(params, t, T)
    return PhaseState(t, v, v1, v2, v3)


def ode_residual(params: ProblemParams, v: float, v2: float, v4: float) -> float:
    """``v'''' - A v'' - f(v)``."""
    return v4 - params.A * v2 - f_nonlinearity(params, v)


def relative_ode_residual(params: ProblemParams, v: float, v2: float, v4: float) -> float:
    """``|v - A v - f(v)|`` divided by ``|v| + A|v''| + |v|^p + B|v|``."""
    scale = abs(v4) + params.A * abs(v2) + abs(v) ** params.p + params.B * abs(v)
    if scale == 0.0:
        return 0.0
    return abs(ode_residual(params, v, v2, v4)) / scale
