"""Closed-form iterated integrals over the ordered time simplex.

    I_1(t; a, b) = int_0^t (t-s)^-a s^-b ds
    I_n(t; a, b) = int_{0<s_1<...<s_n<t} (t-s_n)^-a prod_k (s_k - s_{k-1})^(-1/4) s_1^-b ds

and the factorial-decay envelope ``C(t)^n n^(-n/2)`` that controls the
per-order chaos variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "SimplexIntegralSpec",
    "simplex_integral",
    "log_simplex_integral",
    "beta_integral",
    "variance_constant",
    "stirling_envelope",
    "FactorialDecay",
    "factorial_decay_bound",
    "truncation_tail_estimate",
]

_LGAMMA_34 = math.lgamma(0.75)


@dataclass(frozen=True)
class SimplexIntegralSpec:
    n: int
    alpha: float
    beta: float
    t: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"depth n={self.n} must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha={self.alpha} must lie in (0, 1)")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta={self.beta} must lie in [0, 1)")
        if self.t <= 0.0:
            raise ValueError(f"t={self.t} must be positive")

    @property
    def time_exponent(self) -> float:
        return (3 * self.n + 1 - 4 * self.alpha - 4 * self.beta) / 4.0


def log_simplex_integral(spec: SimplexIntegralSpec) -> float:
    n, a, b, t = spec.n, spec.alpha, spec.beta, spec.t
    return ((n - 1) * _LGAMMA_34 + gammaln(1 - a) + gammaln(1 - b)
            - gammaln((3 * n + 5 - 4 * a - 4 * b) / 4.0)
            + spec.time_exponent * math.log(t))


def simplex_integral(spec: SimplexIntegralSpec | None = None, *, n=None, alpha=None,
                     beta=None, t=None) -> float:
    """Value of ``I_n(t; alpha, beta)`` from its Gamma-function closed form.

    Accepts either a :class:`SimplexIntegralSpec` or the four keyword
    arguments.  All Gamma factors are positive on the admissible range, so
    the log-Gamma path needs no sign bookkeeping.
    """
    if spec is None:
        spec = SimplexIntegralSpec(n, alpha, beta, t)
    return math.exp(log_simplex_integral(spec))


def beta_integral(p: float, q: float, t: float = 1.0) -> float:
    """``int_0^t s^p (t-s)^q ds`` for ``p, q > -1``."""
    if p <= -1 or q <= -1:
        raise ValueError("need p, q > -1")
    return math.exp((p + q + 1) * math.log(t) + gammaln(1 + p) + gammaln(1 + q)
                    - gammaln(2 + p + q))


def variance_constant(t: float) -> float:
    """``C(t) = (4/3)^(3/2) e^(1/2) Gamma(3/4)^2 (1 + sqrt t)^2 t^(3/2)``."""
    return ((4.0 / 3.0) ** 1.5 * math.exp(0.5) * math.exp(2 * _LGAMMA_34)
            * (1.0 + math.sqrt(t)) ** 2 * t ** 1.5)


def stirling_envelope(n: int, t: float) -> float:
    """``C(t)^n n^(-n/2)``, with the order-zero value 1."""
    if n == 0:
        return 1.0
    return math.exp(n * math.log(variance_constant(t)) - 0.5 * n * math.log(n))


@dataclass
class FactorialDecay:
    """``m! I_m^2`` for ``m = 1..n`` and the smallest ``C`` with ``m! I_m^2 <= C^m m^(-m/2)``."""

    orders: np.ndarray
    scaled: np.ndarray
    constant: float

    @property
    def normalized(self) -> np.ndarray:
        """``m! I_m^2 m^(m/2)``; stays bounded by ``constant**m``."""
        m = self.orders
        return np.exp(np.log(self.scaled) + 0.5 * m * np.log(m))


def factorial_decay_bound(n: int, alpha: float, beta: float, t: float) -> FactorialDecay:
    orders = np.arange(1, n + 1)
    logs = np.array([math.lgamma(m + 1) + 2 * log_simplex_integral(
        SimplexIntegralSpec(int(m), alpha, beta, t)) for m in orders])
    # C^m >= m! I_m^2 m^(m/2)  <=>  log C >= (log(m! I_m^2) + m/2 log m) / m
    logc = np.max((logs + 0.5 * orders * np.log(orders)) / orders)
    return FactorialDecay(orders, np.exp(logs), float(math.exp(logc)))


def truncation_tail_estimate(order_variances, t: float, u0_norm_sq: float = 1.0,
                             weight: float = 1.0) -> float:
    """Upper bound on ``sum_{n>N} weight^n v_n`` from the envelope
    ``v_n <= C(t)^n n^(-n/2) ||u0||^2``.

    ``order_variances`` holds ``v_0..v_N``; only its length enters the
    bound.  Returns ``inf`` when the envelope overflows double precision
    (large ``t`` makes ``C(t)`` huge even though the series converges).
    """
    N = len(order_variances) - 1
    if N < 2:
        raise ValueError("need at least two orders to extrapolate")
    logc = math.log(variance_constant(t) * weight)
    # log-terms n logC - n/2 log n peak at n = C^2/e; beyond e^3 C^2 the
    # ratio of consecutive terms is below e^-1, so the rest is geometric
    n_stop = int(max(N + 2, math.exp(2 * logc + 3.0))) + 64
    if n_stop > 50_000_000:
        return math.inf
    n = np.arange(N + 1, n_stop + 1, dtype=float)
    logs = n * logc - 0.5 * n * np.log(n)
    top = float(logs.max())
    if top > 700.0:
        return math.inf
    total = float(np.sum(np.exp(logs)))
    last = math.exp(float(logs[-1]))
    return (total + last / (1.0 - math.exp(-1.0))) * u0_norm_sq
