import math

import mpmath as mp
import numpy as np
import pytest

from biharm.params import DomainError, make_generic_params, make_params

mp.mp.dps = 40


def _closed_forms(n):
    n = mp.mpf(n)
    A = (n * (n - 4) + 8) / 2
    B = n**2 * (n - 4) ** 2 / 16
    p = (n + 4) / (n - 4)
    a0 = B ** (1 / (p - 1))
    cn = ((n - 4) * (n - 2) * n * (n + 2)) ** ((n - 4) / 8)
    vm = (B / p) ** (1 / (p - 1))
    b = B * (1 - 1 / p) * vm
    return A, B, p, a0, cn, b


def test_n8_constants():
    P = make_params(8)
    assert (P.A, P.B, P.p, P.a0) == (20.0, 64.0, 3.0, 8.0)
    assert (P.lam, P.mu) == (4.0, 16.0)
    assert P.cn == pytest.approx(math.sqrt(1920.0), rel=1e-15)
    assert P.b == pytest.approx(64 * (2 / 3) * math.sqrt(64 / 3), rel=1e-15)
    assert P.beta0 == pytest.approx(P.b / P.A, rel=1e-15)


def test_n5_constants():
    P = make_params(5)
    assert (P.A, P.B, P.p) == (6.5, 1.5625, 9.0)
    assert P.a0 == pytest.approx(1.0573712634405641, rel=1e-15)
    assert P.cn == pytest.approx(105.0 ** 0.125, rel=1e-15)
    assert P.cn == pytest.approx(1.7891580, abs=1e-6)
    assert (P.lam, P.mu) == (0.25, 6.25)


@pytest.mark.parametrize("n", range(5, 41))
def test_against_high_precision(n):
    P = make_params(n)
    A, B, p, a0, cn, b = _closed_forms(n)
    assert P.A == float(A) and P.B == float(B)
    assert abs(P.a0 - float(a0)) <= 4e-16 * float(a0)
    assert abs(P.cn - float(cn)) <= 4e-16 * float(cn)
    assert abs(P.b - float(b)) <= 1e-14 * float(b)


@pytest.mark.parametrize("n", range(5, 13))
def test_characteristic_roots(n):
    P = make_params(n)
    roots = np.sort(np.roots([1.0, -P.A, P.B]).real)
    assert P.lam == pytest.approx(roots[0], rel=1e-13)
    assert P.mu == pytest.approx(roots[1], rel=1e-13)
    assert 0 < P.lam < P.mu
    assert P.lam * P.mu == pytest.approx(P.B, rel=1e-15)


@pytest.mark.parametrize("n", [5, 6, 8, 11])
def test_a0_is_positive_zero_of_f(n):
    P = make_params(n)
    assert P.a0 ** P.p - P.B * P.a0 == pytest.approx(0.0, abs=1e-13 * P.B * P.a0)


@pytest.mark.parametrize("n", [5, 8])
def test_beta0_makes_fourth_derivative_positive(n):
    # v''''(0) = A beta + f(a) with min f = -b, so beta > b/A keeps it positive
    P = make_params(n)
    fmin = -min(v**P.p - P.B * v for v in np.linspace(0, P.a0, 200001))
    assert fmin == pytest.approx(P.b, rel=1e-9)
    assert P.A * P.beta0 - P.b == pytest.approx(0.0, abs=1e-12 * P.b)


@pytest.mark.parametrize("bad", [4, 3, 0, -2, 5.0, 4.5, True, "8", None])
def test_make_params_rejects(bad):
    with pytest.raises(DomainError):
        make_params(bad)


def test_generic_matches_dimensional():
    P = make_params(8)
    G = make_generic_params(20, 64, 3)
    assert G.n is None and G.cn is None and G.is_generic
    for k in ("A", "B", "p", "a0", "lam", "mu", "b", "beta0"):
        assert getattr(G, k) == getattr(P, k)


def test_generic_non_integer_power():
    G = make_generic_params(3.0, 1.0, 2.5)
    assert G.p_int is None
    assert G.a0 == pytest.approx(1.0)
    assert G.a0 ** 2.5 - G.a0 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("args,word", [
    ((0.0, 1.0, 2.0), "A > 0"),
    ((2.0, 1.0, 2.0), "4B < A^2"),
    ((3.0, 1.0, 1.0), "p > 1"),
    ((3.0, -1.0, 2.0), "B > 0"),
    ((math.nan, 1.0, 2.0), "finite"),
])
def test_generic_validation_names_condition(args, word):
    with pytest.raises(DomainError, match=word.replace("^", r"\^")):
        make_generic_params(*args)


def test_decay_exponent():
    assert make_params(8).decay_exponent == 2.0
    with pytest.raises(DomainError):
        make_generic_params(20, 64, 3).decay_exponent


def test_to_dict_keys():
    d = make_params(6).to_dict()
    assert set(d) == {"n", "A", "B", "p", "a0", "cn", "lambda", "mu", "b", "beta0"}
