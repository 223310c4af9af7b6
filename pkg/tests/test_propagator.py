import math

import numpy as np
import pytest

from wickheat.chaos_index import MultiIndex, characteristic_set
from wickheat.oracles import iterated_integral_coefficient
from wickheat.propagator import (
    BudgetExceeded,
    ChaosField,
    TruncationError,
    budget_count,
    positivity_certificate,
    potential_solve,
    solve_fundamental,
    solve_propagator,
)
from wickheat.simplex_integrals import variance_constant
from wickheat.spectral_basis import SpectralFunction, basis_values, composite_gauss_legendre, heat_kernel

SQPI = math.sqrt(math.pi)


@pytest.fixture(scope="module")
def const_field():
    return solve_propagator(SpectralFunction.constant(16), 3, 16, 4)


def test_zero_index_is_heat_flow(const_field):
    assert const_field.eval_coefficient(MultiIndex.zero(), 7.0, 0.3) == pytest.approx(1 / SQPI)
    u0 = SpectralFunction.random_band_limited(5, 10, seed=2)
    f = solve_propagator(u0, 1, 10, 2)
    lam = np.arange(10) ** 2
    np.testing.assert_allclose(f.spectral_values(0.4)[0], np.exp(-lam * 0.4) * u0.coeffs)


@pytest.mark.parametrize("j", [2, 3, 4])
def test_single_forced_mode_closed_form(const_field, j):
    modes = const_field.coefficient(MultiIndex.unit(j))
    assert set(modes) == {j}
    lam = (j - 1) ** 2
    t = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(modes[j](t), (1 - np.exp(-lam * t)) / lam / SQPI, rtol=1e-14)


def test_first_mode_grows_linearly(const_field):
    for t in (0.5, 2.0):
        assert const_field.eval_coefficient(MultiIndex.unit(1), t, 1.1) == pytest.approx(t / math.pi)


def test_eval_example_and_t0(const_field):
    v = const_field.eval_coefficient(MultiIndex.unit(2), 1.0, 0.0)
    assert v == pytest.approx((1 - math.exp(-1)) / SQPI * math.sqrt(2 / math.pi), rel=1e-14)
    assert v == pytest.approx(0.2845, abs=1e-4)
    xs = np.linspace(0, math.pi, 5)
    vals = const_field.values(0.0, xs)
    np.testing.assert_allclose(vals[0], 1 / SQPI)
    np.testing.assert_allclose(vals[1:], 0.0, atol=1e-15)


def test_truncation_error(const_field):
    with pytest.raises(TruncationError, match="outside truncation"):
        const_field.eval_coefficient(MultiIndex.unit(9), 1.0, 0.0)
    with pytest.raises(TruncationError):
        const_field.coefficient(MultiIndex.from_dict({1: 4}))


def test_budget_guard():
    assert budget_count(2, 8, 3) == 8 * (1 + 3 + 6)
    with pytest.raises(BudgetExceeded, match="budget exceeded") as e:
        solve_propagator(SpectralFunction.constant(64), 4, 64, 30)
    assert e.value.count == budget_count(4, 64, 30)


@pytest.mark.slow
@pytest.mark.parametrize("alpha_text", ["1^1", "2^1", "3^1", "1^2", "1^1 2^1", "2^1 3^1", "3^2"])
def test_oracle_equivalence(alpha_text):
    K = 8
    u0 = SpectralFunction.constant(K)
    f = solve_propagator(u0, 2, K, 3)
    alpha = MultiIndex.parse(alpha_text)
    xs = np.array([0.2, 1.3, 2.9])
    got = f.eval_coefficient(alpha, 0.5, xs)
    ref = iterated_integral_coefficient(alpha, u0, 0.5, xs, K)
    np.testing.assert_allclose(got, ref, rtol=1e-5, atol=1e-12)


def test_linearity_exact():
    K, M = 10, 3
    u = SpectralFunction.random_band_limited(4, K, seed=0)
    v = SpectralFunction.random_band_limited(6, K, seed=1)
    a, b = 0.75, -1.5
    fu, fv = solve_propagator(u, 2, K, M), solve_propagator(v, 2, K, M)
    fw = solve_propagator(a * u + b * v, 2, K, M)
    for t in (0.3, 1.2):
        np.testing.assert_allclose(fw.spectral_values(t),
                                   a * fu.spectral_values(t) + b * fv.spectral_values(t),
                                   atol=1e-13)


def test_stirling_bound_and_monotone_in_M():
    u0 = SpectralFunction.constant(16)
    f3 = solve_propagator(u0, 3, 16, 3)
    f6 = solve_propagator(u0, 3, 16, 6)
    for t in (0.25, 1.0, 4.0):
        assert np.all(f6.stirling_ratios(t) <= 1.0)
        assert np.all(f6.order_variances(t) >= f3.order_variances(t) - 1e-15)
    assert f6.order_variance(0, 1.0) == pytest.approx(1.0)
    assert 0 < f6.order_variance(1, 1.0) <= variance_constant(1.0)
    # order-one variance from the single-mode closed forms
    lam = np.arange(1, 6) ** 2
    expect = 1 / math.pi + np.sum(((1 - np.exp(-lam)) / lam) ** 2) / math.pi
    assert f6.order_variance(1, 1.0) == pytest.approx(expect, rel=1e-13)


def test_csv_round_trip(const_field):
    g = ChaosField.from_csv(const_field.to_csv(), const_field.metadata())
    np.testing.assert_array_equal(g.spectral_values(0.7), const_field.spectral_values(0.7))


def test_order_independence_of_solution():
    # the same alpha solved within different M caps has identical coefficients
    u0 = SpectralFunction.constant(12)
    a = solve_propagator(u0, 2, 12, 3)
    b = solve_propagator(u0, 2, 12, 5)
    for alpha in a.alphas:
        assert a.coefficient(alpha).keys() == b.coefficient(alpha).keys()
        for k, p in a.coefficient(alpha).items():
            assert p == b.coefficient(alpha)[k]


@pytest.fixture(scope="module")
def fundamental_grid():
    ys = np.linspace(0.3, 2.8, 5)
    return ys, {y: solve_fundamental(y, 2, 16, 3) for y in ys}


def test_fundamental_mean_is_heat_kernel(fundamental_grid):
    ys, fields = fundamental_grid
    for t in (0.05, 0.5, 2.0):
        for y in ys:
            np.testing.assert_allclose(fields[y].values(t, ys)[0], heat_kernel(t, ys, y, 16),
                                       atol=1e-10)


def test_fundamental_symmetry(fundamental_grid):
    ys, fields = fundamental_grid
    vals = np.stack([fields[y].values(0.5, ys) for y in ys], axis=-1)
    assert np.max(np.abs(vals - np.swapaxes(vals, 1, 2))) <= 1e-8


def test_fundamental_integrates_to_constant_solution():
    K, M = 8, 3
    yq, wq = composite_gauss_legendre(1, 16)
    acc = None
    for y, w in zip(yq, wq):
        U = solve_fundamental(y, 2, K, M).spectral_values(0.7)
        acc = w * U if acc is None else acc + w * U
    ref = solve_propagator(SpectralFunction.constant(K) * SQPI, 2, K, M).spectral_values(0.7)
    np.testing.assert_allclose(acc, ref, atol=1e-12)


def test_fundamental_rejects_bad_source():
    with pytest.raises(ValueError):
        solve_fundamental(4.0, 1, 8, 2)


def test_positivity_zero_potential():
    u0 = SpectralFunction.constant(16)
    rep = positivity_certificate(u0, SpectralFunction(np.zeros(2)), N=2, K=16, M=2)
    assert rep.min_value == pytest.approx(1 / SQPI)
    assert rep.gaps[0] <= 1e-14 and rep.monotone


def test_positivity_constant_potential_geometric():
    c = 0.8
    u0 = SpectralFunction.constant(16)
    h = SpectralFunction([c])
    rep = positivity_certificate(u0, h, N=6, K=16, M=1)
    # V = e^{c t / sqrt(pi)} / sqrt(pi)
    assert rep.min_value == pytest.approx(1 / SQPI)
    sol = potential_solve(u0, h, 16)
    assert sol(1.0)[0] == pytest.approx(math.exp(c / SQPI), rel=1e-13)
    g = rep.gaps
    assert rep.monotone
    # Poisson tail of exp(c/sqrt(pi)): ratio of consecutive gaps shrinks
    assert g[5] / g[4] < g[2] / g[1] < 1


def test_positivity_rejects_negative_data_and_wide_potential():
    with pytest.raises(ValueError, match="requires non-negative data"):
        positivity_certificate(SpectralFunction([0.0, 1.0]), SpectralFunction([0.1]), N=1, K=8)
    with pytest.raises(ValueError):
        positivity_certificate(SpectralFunction.constant(8), SpectralFunction([0, 0, 1.0]),
                               N=1, K=8, M=2)
