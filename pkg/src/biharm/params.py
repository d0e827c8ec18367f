"""Closed-form constants for the critical biharmonic problem in Emden-Fowler form.

After the substitution ``u(x) = |x|^{-(n-4)/2} v(ln|x|)`` the radial equation
becomes the autonomous ODE ``v'''' - A v'' - f(v) = 0`` with
``f(v) = |v|^{p-1} v - B v``.  Everything downstream depends only on
``(A, B, p)``; ``n`` is kept for the closed-form homoclinic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


class DomainError(ValueError):
    """Raised when a constructor receives parameters outside the admissible regime."""


def _positive_power(base: float, exponent: float) -> float:
    """``base**exponent`` for ``base > 0``.

    When ``1/exponent`` is an integer ``k`` (``a0 = B**(1/(p-1))`` with integral
    ``p - 1``) the libm result is polished by one Newton step on
    ``y**k = base``.
    """
    if base <= 0.0:
        raise DomainError(f"base must be positive, got {base!r}")
    y = base**exponent
    inv = 1.0 / exponent
    k = round(inv)
    if k >= 1 and abs(inv - k) < 1e-12:
        y -= (y**k - base) / (k * y ** (k - 1))
    return y


@dataclass(frozen=True)
class ProblemParams:
    """All derived constants of one problem instance.

    ``n`` and ``cn`` are ``None`` for instances built from generic ``(A, B, p)``.
    ``lam <= mu`` are the roots of ``xi**2 - A xi + B`` (so ``xi**4 - A xi**2 + B``
    factors as ``(xi**2 - lam)(xi**2 - mu)``).
    """

    n: Optional[int]
    A: float
    B: float
    p: float
    a0: float
    cn: Optional[float]
    lam: float
    mu: float
    b: float
    beta0: float

    @property
    def p_int(self) -> Optional[int]:
        """``p`` as an int when it is integral, else ``None``."""
        k = round(self.p)
        return int(k) if self.p == k else None

    @property
    def is_generic(self) -> bool:
        return self.n is None

    @property
    def decay_exponent(self) -> float:
        """``(n-4)/2``, the power of ``|x|`` removed by the Emden-Fowler substitution."""
        if self.n is None:
            raise DomainError("decay exponent (n-4)/2 requires a dimension n")
        return (self.n - 4) / 2.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "A": self.A,
            "B": self.B,
            "p": self.p,
            "a0": self.a0,
            "cn": self.cn,
            "lambda": self.lam,
            "mu": self.mu,
            "b": self.b,
            "beta0": self.beta0,
        }


def _derived(A: float, B: float, p: float, inv_pm1: Optional[float] = None) -> dict:
    half = 0.5 * A
    root = math.sqrt(half * half - B)
    mu = half + root
    # B/mu avoids the cancellation in A/2 - root
    lam = B / mu
    # 1/(p-1), exact when the caller knows it (e.g. (n-4)/8)
    e = inv_pm1 if inv_pm1 is not None else 1.0 / (p - 1.0)
    a0 = _positive_power(B, e)
    # positive minimiser of f(v) = v**p - B v
    v_min = _positive_power(B / p, e)
    b = B * (1.0 - 1.0 / p) * v_min
    return {"A": A, "B": B, "p": p, "a0": a0, "lam": lam, "mu": mu, "b": b, "beta0": b / A}


def make_params(n: int) -> ProblemParams:
    """Build the constants of ``Delta^2 u = u^((n+4)/(n-4))`` in dimension ``n``.

    Examples
    --------
    >>> P = make_params(8)
    >>> P.A, P.B, P.p, P.a0
    (20.0, 64.0, 3.0, 8.0)
    """
    if isinstance(n, bool) or not isinstance(n, int):
        raise DomainError(f"n must be an integer, got {n!r}")
    if n < 5:
        raise DomainError(f"dimension must satisfy n >= 5, got n={n}")
    A = (n * (n - 4) + 8) / 2.0
    B = (n * n * (n - 4) ** 2) / 16.0
    p = (n + 4) / (n - 4)
    d = _derived(A, B, p, inv_pm1=(n - 4) / 8.0)
    cn = _positive_power(float((n - 4) * (n - 2) * n * (n + 2)), (n - 4) / 8.0)
    return ProblemParams(n=n, cn=cn, **d)


def make_generic_params(A: float, B: float, p: float) -> ProblemParams:
    """Constants for ``v'''' - A v'' - |v|^{p-1} v + B v = 0`` with arbitrary coefficients.

    Requires ``A > 0``, ``4B < A**2`` and ``p > 1``.  ``B > 0`` is also needed for
    the constant solution ``a0 = B^(1/(p-1))`` to exist.
    """
    A, B, p = float(A), float(B), float(p)
    if not all(math.isfinite(x) for x in (A, B, p)):
        raise DomainError("A, B and p must be finite")
    if not A > 0.0:
        raise DomainError(f"A > 0 violated (A={A})")
    if not 4.0 * B < A * A:
        raise DomainError(f"4B < A^2 violated (4B={4.0 * B}, A^2={A * A})")
    if not p > 1.0:
        raise DomainError(f"p > 1 violated (p={p})")
    if not B > 0.0:
        raise DomainError(f"B > 0 violated (B={B}); no positive constant solution")
    return ProblemParams(n=None, cn=None, **_derived(A, B, p))
