"""Gaussian draws, random-field realizations and moments of the chaos solution.

The noise is ``W'(x) = sum_k m_k(x) xi_k`` with iid standard normal
``xi_k`` indexed like the cosine basis, so ``xi_1`` drives the constant
mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chaos_index import MultiIndex, hermite_table
from .propagator import ChaosField
from .simplex_integrals import truncation_tail_estimate
from .spectral_basis import basis_values

__all__ = [
    "CHUNK",
    "GaussianDraw",
    "draw_batch",
    "draw",
    "chaos_basis_matrix",
    "sample_field",
    "exact_second_moment",
    "LqNormReport",
    "lq_norm",
    "lp_norm_mc",
    "AdditiveSolution",
    "additive_solution_sample",
    "additive_second_moment",
    "standard_error",
]

#: draws per counter block; each (block, mode) pair gets its own Philox key
CHUNK = 4096


@dataclass(frozen=True)
class GaussianDraw:
    """One realization ``(xi_1, ..., xi_M)`` and the counters that reproduce it."""

    seed: int
    stream: int
    index: int
    values: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.values.shape[-1]


def _block(seed: int, stream: int, mode: int, block: int) -> np.ndarray:
    if not (0 <= stream < 2 ** 16 and 0 <= mode < 2 ** 16 and 0 <= block < 2 ** 32):
        raise ValueError("stream, mode or block counter out of range")
    key = np.array([seed % 2 ** 64, (stream << 48) | (mode << 32) | block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).standard_normal(CHUNK)


def draw_batch(seed: int, n: int, M: int, *, stream: int = 0, start: int = 0) -> np.ndarray:
    """Array of shape ``(n, M)``: draws ``start .. start+n-1`` of the given stream.

    Entry ``[i, k-1]`` depends only on ``(seed, stream, start + i, k)``, so
    batches can be split or regrouped without changing any value.
    """
    out = np.empty((n, M))
    first, last = start // CHUNK, (start + n - 1) // CHUNK if n else start // CHUNK - 1
    for b in range(first, last + 1):
        lo = max(start, b * CHUNK)
        hi = min(start + n, (b + 1) * CHUNK)
        for k in range(M):
            out[lo - start:hi - start, k] = _block(seed, stream, k, b)[lo - b * CHUNK:hi - b * CHUNK]
    return out


def draw(seed: int, index: int, M: int, stream: int = 0) -> GaussianDraw:
    return GaussianDraw(seed, stream, index, draw_batch(seed, 1, M, stream=stream, start=index)[0])


def chaos_basis_matrix(alphas, draws: np.ndarray) -> np.ndarray:
    """``X[d, i] = xi_{alpha_i}`` evaluated on draw ``d``."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    nmax = max((a for alpha in alphas for _, a in alpha.items()), default=0)
    need = max((alpha.max_index for alpha in alphas), default=0)
    if need > draws.shape[1]:
        raise ValueError("draw does not cover multi-index support")
    H = hermite_table(nmax, draws)  # (nmax+1, n_draws, M)
    H /= np.sqrt([math.factorial(a) for a in range(nmax + 1)])[:, None, None]
    out = np.ones((draws.shape[0], len(alphas)))
    for i, alpha in enumerate(alphas):
        for k, a in alpha.items():
            out[:, i] *= H[a, :, k - 1]
    return out


def sample_field(field: ChaosField, draws, t: float, x) -> np.ndarray:
    """Realizations ``u(t, x) = sum_alpha u_alpha(t, x) xi_alpha`` for each draw.

    Returns shape ``(n_draws,) + x.shape``.
    """
    draws = np.asarray(getattr(draws, "values", draws), dtype=float)
    draws = np.atleast_2d(draws)
    if draws.shape[1] < field.M:
        raise ValueError(f"draw has {draws.shape[1]} modes, field needs M={field.M}")
    X = chaos_basis_matrix(field.alphas, draws)
    return np.tensordot(X, field.values(t, x), axes=1)


def exact_second_moment(field: ChaosField, t: float, x, *, return_tail: bool = False):
    """``E u(t,x)^2 = sum_{|alpha|<=N} u_alpha(t,x)^2`` for the truncated field.

    With ``return_tail`` the envelope bound on the omitted orders is also
    returned; that bound controls the x-integrated missing mass, not the
    pointwise value.
    """
    val = np.sum(field.values(t, x) ** 2, axis=0)
    val = val if np.ndim(val) else float(val)
    if return_tail:
        tail = (truncation_tail_estimate(np.zeros(field.N + 1), t, field.u0.norm() ** 2)
                if field.N >= 2 and t > 0 else math.nan)
        return val, tail
    return val


def standard_error(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    samples = np.asarray(samples)
    return samples.std(axis=axis, ddof=1) / math.sqrt(samples.shape[axis])


@dataclass
class LqNormReport:
    """Weighted chaos norm ``sum_n q^n v_n`` of ``u(t, .)`` and hypercontractive ``L_p`` envelopes."""

    q: float
    t: float
    variances: np.ndarray
    weighted_sum: float
    tail: float
    envelopes: dict[float, float]
    diverging: bool

    @property
    def term_ratios(self) -> np.ndarray:
        terms = self.q ** np.arange(self.variances.size) * self.variances
        with np.errstate(divide="ignore", invalid="ignore"):
            return terms[1:] / terms[:-1]


def lq_norm(field: ChaosField, q: float, t: float, ps=(3.0, 4.0, 6.0)) -> LqNormReport:
    """``sum_n q^n sum_{|alpha|=n} ||u_alpha(t,.)||^2`` with envelope tail and L_p bounds.

    The ``L_p`` envelope for each ``p`` is ``sum_n (p-1)^(n/2) v_n^(1/2)``.
    ``diverging`` is set when the weighted terms are still growing at the
    truncation order.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    v = field.order_variances(t)
    n = np.arange(v.size)
    terms = q ** n * v
    tail = (truncation_tail_estimate(v, t, field.u0.norm() ** 2, weight=q)
            if field.N >= 2 else math.nan)
    env = {float(p): float(np.sum((p - 1.0) ** (n / 2.0) * np.sqrt(v))) for p in ps}
    diverging = bool(v.size >= 2 and terms[-1] > terms[-2])
    return LqNormReport(q, t, v, float(terms.sum()), tail, env, diverging)


def lp_norm_mc(field: ChaosField, t: float, p: float, draws: np.ndarray):
    """Monte Carlo ``(E ||u(t,.)||_0^p)^(1/p)`` and its delta-method standard error."""
    X = chaos_basis_matrix(field.alphas, draws)
    coeffs = X @ field.spectral_values(t)  # per-draw cosine coefficients
    norms = np.linalg.norm(coeffs, axis=1) ** p
    m = norms.mean()
    se = standard_error(norms)
    return m ** (1.0 / p), se * m ** (1.0 / p - 1.0) / p


# ----------------------------------------------------------------------
# additive-noise benchmark  U_t = U_xx + W'(x),  U(0) = 0


@dataclass
class AdditiveSolution:
    """Exact series solution of the additive-noise equation.

    ``zeta0`` has variance ``pi`` and ``zeta[..., k-1]`` (``k = 1..K``)
    variance ``pi/2``; leading axes index independent realizations.
    """

    K: int
    zeta0: np.ndarray
    zeta: np.ndarray

    @classmethod
    def from_draws(cls, draws: np.ndarray, K: int | None = None) -> "AdditiveSolution":
        """Use the same Gaussians as the chaos basis: ``zeta_0 = sqrt(pi) xi_1``,
        ``zeta_k = sqrt(pi/2) xi_{k+1}``."""
        draws = np.asarray(draws, dtype=float)
        K = draws.shape[-1] - 1 if K is None else K
        if draws.shape[-1] < K + 1:
            raise ValueError("draw does not cover the requested modes")
        return cls(K, math.sqrt(math.pi) * draws[..., 0],
                   math.sqrt(math.pi / 2.0) * draws[..., 1:K + 1])

    def _k(self):
        return np.arange(1, self.K + 1, dtype=float)

    def _modes(self, x, fn):
        x = np.asarray(x, dtype=float)
        k = self._k().reshape((-1,) + (1,) * x.ndim)
        return fn(k * x)  # (K,) + x.shape

    def U(self, t: float, x):
        k = self._k()
        w = (2.0 / math.pi) * (1.0 - np.exp(-k * k * t)) / (k * k)
        series = np.tensordot(self.zeta * w, self._modes(x, np.cos), axes=1)
        return (t / math.pi) * np.expand_dims(self.zeta0, tuple(range(-np.ndim(x), 0))) + series

    def U_tilde(self, t: float, x):
        """``U - zeta_0 t / pi``, the part whose time increments are compared."""
        k = self._k()
        w = (2.0 / math.pi) * (1.0 - np.exp(-k * k * t)) / (k * k)
        return np.tensordot(self.zeta * w, self._modes(x, np.cos), axes=1)

    def U_x(self, t: float, x):
        k = self._k()
        w = -(2.0 / math.pi) * (1.0 - np.exp(-k * k * t)) / k
        return np.tensordot(self.zeta * w, self._modes(x, np.sin), axes=1)

    def bridge(self, x):
        """Brownian bridge ``B(x) = (2/pi) sum_k zeta_k sin(kx) / k``."""
        w = (2.0 / math.pi) / self._k()
        return np.tensordot(self.zeta * w, self._modes(x, np.sin), axes=1)

    @staticmethod
    def compensator_coefficients(t: float, K: int) -> np.ndarray:
        """Multipliers of ``zeta_k sin(kx)`` in ``U_x + B``: ``(2/pi) exp(-k^2 t) / k``."""
        k = np.arange(1, K + 1, dtype=float)
        return (2.0 / math.pi) * np.exp(-k * k * t) / k

    def compensated_derivative(self, t: float, x):
        w = self.compensator_coefficients(t, self.K)
        return np.tensordot(self.zeta * w, self._modes(x, np.sin), axes=1)


def additive_solution_sample(K: int, seed: int, n_draws: int = 1, stream: int = 0) -> AdditiveSolution:
    if K < 1:
        raise ValueError("K must be >= 1")
    return AdditiveSolution.from_draws(draw_batch(seed, n_draws, K + 1, stream=stream), K)


def additive_second_moment(t: float, x, K: int):
    """``E U(t,x)^2 = t^2/pi + (2/pi) sum_{k<=K} k^-4 (1-e^{-k^2 t})^2 cos^2(kx)``."""
    x = np.asarray(x, dtype=float)
    k = np.arange(1, K + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    s = np.sum(k ** -4 * (1 - np.exp(-k * k * t)) ** 2 * np.cos(k * x) ** 2, axis=0)
    out = t * t / math.pi + (2.0 / math.pi) * s
    return out if out.ndim else float(out)
