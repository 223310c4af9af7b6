"""Multi-indices, Hermite polynomials and the Wick product.

A multi-index addresses one element of the Cameron-Martin basis

    xi_alpha = prod_k He_{alpha_k}(xi_k) / sqrt(alpha_k!)

built from iid standard Gaussians xi_1, xi_2, ...  Indices are 1-based,
matching the cosine basis used everywhere else in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "MultiIndex",
    "enumerate_multiindices",
    "count_multiindices",
    "characteristic_set",
    "from_characteristic_set",
    "hermite",
    "hermite_table",
    "chaos_basis_eval",
    "wick_product_coeffs",
]

#: above this order alpha! is evaluated through log-Gamma
_EXACT_FACTORIAL_ORDER = 12


@dataclass(frozen=True, order=False)
class MultiIndex:
    """Finitely supported sequence of non-negative integers.

    Only the non-zero entries are stored, as a sorted tuple of
    ``(index, value)`` pairs.  Construct with :meth:`from_dict`,
    :meth:`unit`, :meth:`zero` or :func:`from_characteristic_set`.
    """

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = 0
        for k, a in self.entries:
            if k <= prev:
                raise ValueError("multi-index entries must have strictly increasing indices >= 1")
            if a < 1:
                raise ValueError("multi-index stores only positive values")
            prev = k

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls) -> "MultiIndex":
        return cls(())

    @classmethod
    def unit(cls, k: int) -> "MultiIndex":
        return cls(((int(k), 1),))

    @classmethod
    def from_dict(cls, d: Mapping[int, int]) -> "MultiIndex":
        return cls(tuple(sorted((int(k), int(a)) for k, a in d.items() if a)))

    @classmethod
    def from_dense(cls, seq: Iterable[int]) -> "MultiIndex":
        """From a dense sequence ``(alpha_1, alpha_2, ...)``."""
        return cls(tuple((i + 1, int(a)) for i, a in enumerate(seq) if a))

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        """Inverse of :meth:`canonical_text`."""
        text = text.strip()
        if text in ("", "0"):
            return cls.zero()
        d = {}
        for tok in text.split():
            k, _, a = tok.partition("^")
            d[int(k)] = int(a) if a else 1
        return cls.from_dict(d)

    # queries ----------------------------------------------------------
    @property
    def order(self) -> int:
        return sum(a for _, a in self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, k: int) -> int:
        for j, a in self.entries:
            if j == k:
                return a
        return 0

    def items(self):
        return iter(self.entries)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.entries)

    @property
    def max_index(self) -> int:
        return self.entries[-1][0] if self.entries else 0

    def factorial(self) -> float:
        """alpha! = prod_k alpha_k!"""
        if self.order <= _EXACT_FACTORIAL_ORDER:
            return float(math.prod(math.factorial(a) for _, a in self.entries))
        return math.exp(self.log_factorial())

    def log_factorial(self) -> float:
        return sum(math.lgamma(a + 1) for _, a in self.entries)

    def to_dense(self, length: int | None = None) -> tuple[int, ...]:
        length = self.max_index if length is None else length
        out = [0] * length
        for k, a in self.entries:
            out[k - 1] = a
        return tuple(out)

    # arithmetic -------------------------------------------------------
    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        d = dict(self.entries)
        for k, a in other.entries:
            d[k] = d.get(k, 0) + a
        return MultiIndex.from_dict(d)

    def minus_unit(self, k: int) -> "MultiIndex":
        """alpha^-(k); the result is unchanged when alpha_k = 0."""
        d = dict(self.entries)
        if k in d:
            d[k] -= 1
        return MultiIndex.from_dict(d)

    def plus_unit(self, k: int) -> "MultiIndex":
        return self + MultiIndex.unit(k)

    def canonical_text(self) -> str:
        """Text form ``"k1^a1 k2^a2 ..."``; the zero index is ``"0"``."""
        if not self.entries:
            return "0"
        return " ".join(f"{k}^{a}" for k, a in self.entries)

    def sort_key(self):
        return (self.order, characteristic_set(self) if self.entries else ())

    def __lt__(self, other: "MultiIndex"):
        return self.sort_key() < other.sort_key()

    def __str__(self):
        return self.canonical_text()

    def __repr__(self):
        return f"MultiIndex({self.canonical_text()!r})"


def characteristic_set(alpha: MultiIndex) -> tuple[int, ...]:
    """Sorted tuple listing each index ``k`` with multiplicity ``alpha_k``."""
    if alpha.order == 0:
        raise ValueError("no characteristic set for order 0")
    out: list[int] = []
    for k, a in alpha.entries:
        out.extend([k] * a)
    return tuple(out)


def from_characteristic_set(ks: Iterable[int]) -> MultiIndex:
    d: dict[int, int] = {}
    for k in ks:
        if k < 1:
            raise ValueError("basis indices start at 1")
        d[k] = d.get(k, 0) + 1
    return MultiIndex.from_dict(d)


@lru_cache(maxsize=256)
def _enumerate(order: int, max_index: int) -> tuple[MultiIndex, ...]:
    if order == 0:
        return (MultiIndex.zero(),)
    return tuple(
        from_characteristic_set(ks)
        for ks in combinations_with_replacement(range(1, max_index + 1), order)
    )


def enumerate_multiindices(order: int, max_index: int) -> list[MultiIndex]:
    """All multi-indices of the given order supported in ``{1..max_index}``.

    The order is lexicographic on characteristic sets and the count is
    ``binomial(order + max_index - 1, order)``.
    """
    if order < 0 or max_index < 1:
        raise ValueError("need order >= 0 and max_index >= 1")
    return list(_enumerate(int(order), int(max_index)))


def count_multiindices(order: int, max_index: int) -> int:
    return math.comb(order + max_index - 1, order)


def hermite(n: int, x):
    """Probabilists' Hermite polynomial He_n evaluated by forward recurrence.

    Works elementwise on arrays.
    """
    if n < 0:
        raise ValueError("Hermite degree must be non-negative")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for m in range(1, n):
        h_prev, h = h, x * h - m * h_prev
    return h if h.ndim else float(h)


def hermite_table(nmax: int, x) -> np.ndarray:
    """Array of shape ``(nmax + 1,) + x.shape`` holding He_0..He_nmax."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for m in range(1, nmax):
        out[m + 1] = x * out[m] - m * out[m - 1]
    return out


def chaos_basis_eval(alpha: MultiIndex, draw) -> np.ndarray | float:
    """Evaluate xi_alpha on one draw or a batch of draws.

    ``draw`` is an array whose last axis runs over the Gaussian modes
    xi_1..xi_M (or a :class:`~wickheat.stochastic_field.GaussianDraw`).
    """
    values = np.asarray(getattr(draw, "values", draw), dtype=float)
    if alpha.max_index > values.shape[-1]:
        raise ValueError("draw does not cover multi-index support")
    out = np.ones(values.shape[:-1])
    for k, a in alpha.entries:
        out = out * hermite(a, values[..., k - 1]) / math.sqrt(math.factorial(a))
    return out if out.ndim else float(out)


def _wick_weight(alpha: MultiIndex, beta: MultiIndex) -> float:
    """sqrt(alpha! / (beta! gamma!)) with gamma = alpha - beta."""
    w = 1
    for k, a in alpha.entries:
        w *= math.comb(a, beta[k])
    return math.sqrt(w)


def wick_product_coeffs(eta: Mapping[MultiIndex, object],
                        zeta: Mapping[MultiIndex, float],
                        max_order: int | None = None):
    """Chaos coefficients of the Wick product of ``eta`` and ``zeta``.

    ``eta`` maps multi-indices to scalars or arrays (e.g. spectral
    coefficient vectors), ``zeta`` maps them to scalars.  Terms of order
    above ``max_order`` are dropped.

    Returns
    -------
    coeffs : dict
        ``(eta <> zeta)_alpha`` for every retained alpha.
    dropped : float
        Sum of squared norms of the dropped coefficients.
    """
    out: dict[MultiIndex, object] = {}
    for beta, eb in eta.items():
        for gamma, zg in zeta.items():
            alpha = beta + gamma
            term = _wick_weight(alpha, beta) * np.asarray(eb) * zg
            out[alpha] = out[alpha] + term if alpha in out else term
    dropped = 0.0
    if max_order is not None:
        for alpha in [a for a in out if a.order > max_order]:
            dropped += float(np.sum(np.asarray(out.pop(alpha)) ** 2))
    coeffs = {a: (float(v) if np.ndim(v) == 0 else v)
              for a, v in sorted(out.items(), key=lambda kv: kv[0].sort_key())}
    return coeffs, dropped
