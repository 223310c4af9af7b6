import math

import numpy as np
import pytest
from scipy import stats

from wickheat import diagnostics
from wickheat.chaos_index import MultiIndex
from wickheat.propagator import solve_propagator
from wickheat.spectral_basis import SpectralFunction
from wickheat.stochastic_field import (
    CHUNK,
    AdditiveSolution,
    additive_second_moment,
    additive_solution_sample,
    chaos_basis_matrix,
    draw,
    draw_batch,
    exact_second_moment,
    lp_norm_mc,
    lq_norm,
    sample_field,
    standard_error,
)

N_MC = 100_000


@pytest.fixture(scope="module")
def field():
    return solve_propagator(SpectralFunction.constant(16), 2, 16, 4)


@pytest.fixture(scope="module")
def draws():
    return draw_batch(2024, N_MC, 6)


def test_draws_reproducible_and_splittable():
    a = draw_batch(7, 3 * CHUNK + 11, 3)
    b = np.vstack([draw_batch(7, 100, 3), draw_batch(7, 3 * CHUNK - 89, 3, start=100)])
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(draw(7, 5000, 3).values, a[5000])
    # more modes never change the leading ones
    np.testing.assert_array_equal(draw_batch(7, 50, 5)[:, :3], a[:50])
    assert not np.allclose(draw_batch(7, 50, 3, stream=1), a[:50])
    assert not np.allclose(draw_batch(8, 50, 3), a[:50])


def test_draw_moments(draws):
    m = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / math.sqrt(N_MC)
    assert np.all(np.abs(m) <= 5 * se)
    sq = draws ** 2
    assert np.all(np.abs(sq.mean(axis=0) - 1) <= 5 * standard_error(sq))


def test_chaos_basis_matrix_errors(draws):
    with pytest.raises(ValueError, match="draw does not cover"):
        chaos_basis_matrix([MultiIndex.unit(9)], draws[:4])


def test_sample_field_order_zero_is_deterministic():
    f = solve_propagator(SpectralFunction.random_band_limited(4, 8, seed=1), 0, 8, 2)
    s = sample_field(f, draw_batch(1, 5, 2), 0.3, np.array([0.1, 2.0]))
    np.testing.assert_allclose(s, np.broadcast_to(f.values(0.3, np.array([0.1, 2.0]))[0], s.shape))
    with pytest.raises(ValueError):
        sample_field(solve_propagator(SpectralFunction.constant(8), 1, 8, 4), draw_batch(1, 3, 2), 1.0, 0.0)


def test_mean_and_variance_match_exact(field, draws):
    xs = np.array([0.3, 1.6, 2.9])
    for t in (0.25, 1.0, 2.0):
        s = sample_field(field, draws, t, xs)
        u0 = field.values(t, xs)[0]
        assert np.all(np.abs(s.mean(axis=0) - u0) <= 5 * standard_error(s))
        dev = (s - u0) ** 2
        var_exact = exact_second_moment(field, t, xs) - u0 ** 2
        assert np.all(np.abs(dev.mean(axis=0) - var_exact) <= 5 * standard_error(dev))


def test_second_moment_grows_with_M():
    u0 = SpectralFunction.constant(16)
    a = exact_second_moment(solve_propagator(u0, 2, 16, 2), 1.0, 0.7)
    b = exact_second_moment(solve_propagator(u0, 2, 16, 5), 1.0, 0.7)
    assert b > a
    n0 = solve_propagator(u0, 0, 16, 5)
    assert exact_second_moment(n0, 1.0, 0.7) == pytest.approx(1 / math.pi)
    val, tail = exact_second_moment(solve_propagator(u0, 3, 16, 3), 0.25, 0.7, return_tail=True)
    assert tail > 0 and math.isfinite(tail)


def test_positivity_in_distribution():
    u0 = SpectralFunction.constant(16)
    xs = np.linspace(0, math.pi, 9)
    d = draw_batch(11, N_MC, 4)
    t = 0.25
    fracs_tail, fracs_zero = [], []
    for N in (2, 3, 4):
        f = solve_propagator(u0, N, 16, 4)
        _, tail = exact_second_moment(f, t, 0.0, return_tail=True)
        s = sample_field(f, d, t, xs)
        fracs_tail.append(np.mean(s < -10 * tail))
        fracs_zero.append(np.mean(s < 0))
    assert all(b <= a for a, b in zip(fracs_tail[:-1], fracs_tail[1:]))
    f1 = solve_propagator(u0, 1, 16, 4)
    assert np.mean(sample_field(f1, d, t, xs) < 0) >= fracs_zero[0]


def test_lq_norm(field):
    f = solve_propagator(SpectralFunction.constant(16), 6, 16, 4)
    r1 = lq_norm(f, 1.0, 1.0)
    assert r1.weighted_sum == pytest.approx(np.sum(f.order_variances(1.0)))
    r4 = lq_norm(f, 4.0, 1.0)
    assert math.isfinite(r4.weighted_sum) and math.isfinite(r4.tail)
    assert r4.term_ratios[-1] < 1 and not r4.diverging
    v = f.order_variances(1.0)
    n = np.arange(v.size)
    assert r4.envelopes[4.0] == pytest.approx(np.sum(3.0 ** (n / 2) * np.sqrt(v)))
    with pytest.raises(ValueError):
        lq_norm(f, 0.0, 1.0)


@pytest.mark.parametrize("p", [3.0, 4.0, 6.0])
def test_hypercontractive_envelope(field, draws, p):
    est, se = lp_norm_mc(field, 1.0, p, draws[:, :field.M])
    env = lq_norm(field, 1.0, 1.0).envelopes[p]
    assert est - 5 * se <= env


# -------------------------------------------------------------------- additive


def test_additive_trivial_identities():
    a = additive_solution_sample(32, seed=3, n_draws=4)
    xs = np.linspace(0, math.pi, 5)
    np.testing.assert_array_equal(a.U(0.0, xs), 0.0)
    np.testing.assert_allclose(a.U_x(0.7, 0.0), 0.0, atol=1e-15)
    np.testing.assert_allclose(a.compensated_derivative(0.7, xs),
                               a.U_x(0.7, xs) + a.bridge(xs), atol=1e-13)


def test_additive_second_moment_mc():
    K = 32
    a = AdditiveSolution.from_draws(draw_batch(5, N_MC, K + 1), K)
    for t, x in [(0.1, 0.4), (0.5, math.pi / 2), (2.0, 2.7)]:
        sq = a.U(t, x) ** 2
        assert abs(sq.mean() - additive_second_moment(t, x, K)) <= 5 * standard_error(sq)
    u = a.U(0.5, 1.1)
    zs = stats.skew(u) / math.sqrt(6 / N_MC)
    zk = stats.kurtosis(u) / math.sqrt(24 / N_MC)
    assert abs(zs) <= 5 and abs(zk) <= 5
    assert abs(u.mean()) <= 5 * standard_error(u)


def test_compensator_decay():
    c = AdditiveSolution.compensator_coefficients(0.5, 12)
    assert c[11] < 1e-30 * c[0]


def test_additive_matches_chaos_first_order():
    # the first chaos of the multiplicative field driven by draws xi is the
    # additive solution with the same Gaussians, scaled by u_0 = 1/sqrt(pi)
    K, M = 16, 6
    f = solve_propagator(SpectralFunction.constant(K), 1, K, M)
    d = draw_batch(3, 5, M)
    xs = np.linspace(0.1, 3.0, 4)
    first = sample_field(f, d, 0.8, xs) - f.values(0.8, xs)[0]
    a = AdditiveSolution.from_draws(d, M - 1)
    np.testing.assert_allclose(first, a.U(0.8, xs) / math.sqrt(math.pi), atol=1e-13)


# ----------------------------------------------------------------- diagnostics


def test_white_noise_partial_sums_diverge():
    x = 1.0
    v = [diagnostics.partial_sum_variance(K, x) for K in (16, 64, 256)]
    assert v[1] / v[0] == pytest.approx(4, rel=0.2) and v[2] / v[1] == pytest.approx(4, rel=0.2)
    d = draw_batch(9, N_MC, 16)
    s = diagnostics.white_noise_partial_sum(d, 16, x)
    assert abs(s.mean()) <= 5 * standard_error(s)
    with pytest.raises(ValueError):
        diagnostics.white_noise_partial_sum(d, 20, x)


def test_brownian_motion_endpoint():
    d = draw_batch(9, 1000, 8)
    np.testing.assert_allclose(diagnostics.brownian_motion(d, math.pi), math.sqrt(math.pi) * d[:, 0],
                               atol=1e-13)
    # Var W(x) -> x as K grows
    K = 4000
    assert np.sum(diagnostics.integrated_basis(K, 1.2) ** 2) == pytest.approx(1.2, rel=1e-3)
