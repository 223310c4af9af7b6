import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wickheat.chaos_index import (
    MultiIndex,
    chaos_basis_eval,
    characteristic_set,
    count_multiindices,
    enumerate_multiindices,
    from_characteristic_set,
    hermite,
    hermite_table,
    wick_product_coeffs,
)

multiindices = st.dictionaries(st.integers(1, 12), st.integers(1, 5), max_size=5).map(
    MultiIndex.from_dict)


def test_enumeration_small_case():
    got = [a.canonical_text() for a in enumerate_multiindices(2, 2)]
    assert got == ["1^2", "1^1 2^1", "2^2"]
    assert [a.canonical_text() for a in enumerate_multiindices(0, 5)] == ["0"]


@given(st.integers(0, 5), st.integers(1, 7))
def test_enumeration_counts_and_uniqueness(n, M):
    alphas = enumerate_multiindices(n, M)
    assert len(alphas) == count_multiindices(n, M) == math.comb(n + M - 1, n)
    assert len(set(alphas)) == len(alphas)
    assert all(a.order == n and a.max_index <= M for a in alphas)


def test_enumeration_rejects_bad_arguments():
    with pytest.raises(ValueError):
        enumerate_multiindices(-1, 3)
    with pytest.raises(ValueError):
        enumerate_multiindices(2, 0)


@given(multiindices)
def test_characteristic_set_round_trip(alpha):
    if alpha.order == 0:
        with pytest.raises(ValueError, match="no characteristic set for order 0"):
            characteristic_set(alpha)
        return
    ks = characteristic_set(alpha)
    assert list(ks) == sorted(ks) and len(ks) == alpha.order
    assert from_characteristic_set(ks) == alpha


@given(multiindices)
def test_text_and_dense_round_trip(alpha):
    assert MultiIndex.parse(alpha.canonical_text()) == alpha
    assert MultiIndex.from_dense(alpha.to_dense()) == alpha


def test_multiindex_validation_and_arithmetic():
    with pytest.raises(ValueError):
        MultiIndex(((2, 1), (1, 1)))
    a = MultiIndex.from_dict({1: 2, 3: 1})
    assert a.minus_unit(1) == MultiIndex.from_dict({1: 1, 3: 1})
    assert a.minus_unit(2) == a
    assert a.plus_unit(2)[2] == 1
    assert a.factorial() == 2.0
    big = MultiIndex.from_dict({1: 20})
    assert big.factorial() == pytest.approx(math.factorial(20), rel=1e-12)


def test_hermite_low_degrees():
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(hermite(2, x), x ** 2 - 1)
    np.testing.assert_allclose(hermite(3, x), x ** 3 - 3 * x)
    np.testing.assert_allclose(hermite(4, x), x ** 4 - 6 * x ** 2 + 3)


@given(st.integers(1, 12), st.floats(-4, 4))
def test_hermite_recurrence_residual(n, x):
    lhs = hermite(n + 1, x)
    rhs = x * hermite(n, x) - n * hermite(n - 1, x)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_hermite_table_matches_scalar():
    x = np.array([-1.3, 0.2, 2.5])
    tab = hermite_table(6, x)
    for n in range(7):
        np.testing.assert_allclose(tab[n], hermite(n, x), rtol=1e-13)


def test_hermite_orthogonality_quadrature():
    # Gauss-Hermite (probabilists') nodes integrate He_n He_m exactly
    z, w = np.polynomial.hermite_e.hermegauss(20)
    w = w / w.sum()
    for n in range(7):
        for m in range(7):
            val = np.sum(w * hermite(n, z) * hermite(m, z))
            assert val == pytest.approx(math.factorial(n) * (n == m), abs=1e-9)


def test_chaos_basis_eval():
    alpha = MultiIndex.from_dict({1: 2, 2: 1})
    d = np.array([0.7, -1.1, 0.3])
    expect = (0.7 ** 2 - 1) / math.sqrt(2) * -1.1
    assert chaos_basis_eval(alpha, d) == pytest.approx(expect)
    with pytest.raises(ValueError, match="draw does not cover multi-index support"):
        chaos_basis_eval(MultiIndex.unit(5), d)


@pytest.mark.parametrize("n,m", [(n, m) for n in range(7) for m in range(7) if n + m <= 6])
def test_wick_hermite_single_gaussian(n, m):
    # He_n = sqrt(n!) xi_{n e1}; the Wick product must give He_{n+m}
    eta = {MultiIndex.from_dict({1: n}): math.sqrt(math.factorial(n))}
    zeta = {MultiIndex.from_dict({1: m}): math.sqrt(math.factorial(m))}
    coeffs, dropped = wick_product_coeffs(eta, zeta)
    key = MultiIndex.from_dict({1: n + m})
    assert list(coeffs) == [key]
    assert math.isclose(coeffs[key], math.sqrt(math.factorial(n + m)), rel_tol=1e-15)
    assert dropped == 0.0


def test_wick_with_unit_is_identity_and_truncation():
    eta = {MultiIndex.zero(): 0.5, MultiIndex.unit(2): np.array([1.0, 2.0])}
    coeffs, _ = wick_product_coeffs(eta, {MultiIndex.zero(): 1.0})
    assert coeffs[MultiIndex.zero()] == 0.5
    np.testing.assert_array_equal(coeffs[MultiIndex.unit(2)], [1.0, 2.0])
    coeffs, dropped = wick_product_coeffs(eta, {MultiIndex.unit(1): 1.0}, max_order=1)
    assert set(coeffs) == {MultiIndex.unit(1)}
    assert dropped == pytest.approx(5.0)


def test_wick_commutative_on_scalars():
    a = {MultiIndex.unit(1): 0.3, MultiIndex.from_dict({2: 1, 3: 1}): -1.2}
    b = {MultiIndex.zero(): 2.0, MultiIndex.unit(2): 0.7}
    ab, _ = wick_product_coeffs(a, b)
    ba, _ = wick_product_coeffs(b, a)
    assert ab.keys() == ba.keys()
    for k in ab:
        assert ab[k] == pytest.approx(ba[k])
