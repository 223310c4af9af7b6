import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from wickheat.exppoly import ExpPoly, duhamel

terms = st.dictionaries(st.tuples(st.integers(0, 9), st.integers(0, 3)),
                        st.floats(-2, 2, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
                        min_size=1, max_size=4).map(ExpPoly)


def test_evaluation_and_derivative():
    p = ExpPoly({(1, 0): 2.0, (4, 2): -0.5})
    t = np.array([0.0, 0.3, 1.7])
    np.testing.assert_allclose(p(t), 2 * np.exp(-t) - 0.5 * t ** 2 * np.exp(-4 * t))
    dp = p.derivative()
    expect = -2 * np.exp(-t) - 0.5 * (2 * t - 4 * t ** 2) * np.exp(-4 * t)
    np.testing.assert_allclose(dp(t), expect, atol=1e-15)


def test_rejects_negative_rates():
    with pytest.raises(ValueError):
        ExpPoly({(-1, 0): 1.0})


@given(terms, st.integers(0, 9), st.floats(0.05, 2.0))
def test_duhamel_against_quadrature(g, mu, t):
    got = duhamel(g, mu)(t)
    ref, _ = quad(lambda s: math.exp(-mu * (t - s)) * g(s), 0.0, t, epsabs=1e-13, epsrel=1e-12)
    assert got == pytest.approx(ref, rel=1e-8, abs=1e-11)


@given(terms, st.integers(0, 9))
def test_duhamel_solves_the_ode(g, mu):
    # y' = -mu y + g, y(0) = 0
    y = duhamel(g, mu)
    t = np.linspace(0.0, 1.5, 7)
    resid = y.derivative()(t) + mu * y(t) - g(t)
    assert np.max(np.abs(resid)) <= 1e-9 * max(1.0, g.max_abs())
    assert abs(y(0.0)) <= 1e-12 * max(1.0, g.max_abs())


def test_resonant_branch_raises_degree():
    y = duhamel(ExpPoly.exp(4, 3.0), 4)
    assert y == ExpPoly({(4, 1): 3.0})


def test_pruning_reports_lost_mass():
    p = ExpPoly({(0, 0): 1.0, (1, 0): 1e-16})
    q, lost = p.pruned(1e-14)
    assert q == ExpPoly.exp(0, 1.0) and lost == pytest.approx(1e-16)


def test_linear_structure():
    a, b = ExpPoly({(1, 0): 1.0}), ExpPoly({(1, 0): 2.0, (2, 1): 1.0})
    assert (a + b) == ExpPoly({(1, 0): 3.0, (2, 1): 1.0})
    assert not (b - b)
    assert (2 * a)(0.0) == 2.0
