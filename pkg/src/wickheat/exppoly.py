"""Exact exponential polynomials ``t -> sum c * t**m * exp(-lam * t)``.

Decay rates are kept as Python ints (they are always sums/differences of
squared wavenumbers here), so resonance ``lam == mu`` in :func:`duhamel`
is an exact integer comparison.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

__all__ = ["ExpPoly", "duhamel", "PRUNE_RTOL"]

PRUNE_RTOL = 1e-14


class ExpPoly:
    """Finite sum of terms ``c t^m e^{-lam t}`` keyed by ``(lam, m)``.

    Instances are treated as immutable; all operations return new objects.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], float] | Iterable = ()):
        d: dict[tuple[int, int], float] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, c in items:
            lam, m = key
            if lam < 0 or m < 0:
                raise ValueError("need decay rate >= 0 and degree >= 0")
            key = (lam, int(m))
            d[key] = d.get(key, 0.0) + float(c)
        self.terms = {k: v for k, v in d.items() if v != 0.0}

    @classmethod
    def exp(cls, lam: int, c: float = 1.0) -> "ExpPoly":
        return cls({(lam, 0): c})

    @classmethod
    def zero(cls) -> "ExpPoly":
        return cls()

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __eq__(self, other):
        return isinstance(other, ExpPoly) and self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"{c:.6g}*t^{m}*e^(-{lam}t)" for (lam, m), c in self)
        return f"ExpPoly({body or '0'})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for (lam, m), c in self.terms.items():
            out = out + c * t ** m * np.exp(-lam * t)
        return out if out.ndim else float(out)

    def derivative(self) -> "ExpPoly":
        d: dict[tuple[int, int], float] = {}
        for (lam, m), c in self.terms.items():
            if lam:
                d[(lam, m)] = d.get((lam, m), 0.0) - lam * c
            if m:
                d[(lam, m - 1)] = d.get((lam, m - 1), 0.0) + m * c
        return ExpPoly(d)

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        d = dict(self.terms)
        for k, c in other.terms.items():
            d[k] = d.get(k, 0.0) + c
        return ExpPoly(d)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-1.0) * other

    def __mul__(self, a: float) -> "ExpPoly":
        return ExpPoly({k: a * c for k, c in self.terms.items()})

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def pruned(self, rtol: float = PRUNE_RTOL) -> tuple["ExpPoly", float]:
        """Drop terms with ``|c| < rtol * max|c|``; also return the dropped ``sum |c|``."""
        cut = rtol * self.max_abs()
        keep, lost = {}, 0.0
        for k, c in self.terms.items():
            if abs(c) < cut:
                lost += abs(c)
            else:
                keep[k] = c
        return ExpPoly(keep), lost

    def as_rows(self):
        """``(lam, m, c)`` triples in sorted order."""
        return [(lam, m, c) for (lam, m), c in self]


def duhamel(g: ExpPoly, mu: int) -> ExpPoly:
    """Exact ``int_0^t exp(-mu (t - s)) g(s) ds``.

    Non-resonant terms (``lam != mu``) use
    ``int_0^t s^m e^{-d s} ds = m!/d^{m+1} (1 - e^{-d t} sum_{i<=m} (d t)^i / i!)``
    with ``d = lam - mu``; resonant terms raise the degree by one.
    """
    out: dict[tuple[int, int], float] = {}

    def add(key, c):
        out[key] = out.get(key, 0.0) + c

    for (lam, m), c in g.terms.items():
        if lam == mu:
            add((mu, m + 1), c / (m + 1))
            continue
        d = lam - mu
        fm = math.factorial(m)
        add((mu, 0), c * fm / d ** (m + 1))
        for i in range(m + 1):
            add((lam, i), -c * fm / (d ** (m + 1 - i) * math.factorial(i)))
    return ExpPoly(out)
