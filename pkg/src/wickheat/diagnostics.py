"""Diagnostics for the formal white-noise series.

``W'(x) = sum_k m_k(x) xi_k`` does not converge pointwise; its partial
sums are exposed here only to demonstrate that (variance grows linearly
in the number of terms) and to build Brownian motion from the integrated
series, which does converge.
"""

from __future__ import annotations

import math

import numpy as np

from .spectral_basis import basis_values

__all__ = ["white_noise_partial_sum", "partial_sum_variance", "brownian_motion",
           "integrated_basis"]


def _values(draw):
    return np.asarray(getattr(draw, "values", draw), dtype=float)


def white_noise_partial_sum(draw, K: int, x):
    """``sum_{k<=K} m_k(x) xi_k``; divergent as ``K -> inf``."""
    v = _values(draw)
    if K > v.shape[-1]:
        raise ValueError(f"partial sum over {K} modes needs a draw with at least {K} modes")
    return np.tensordot(v[..., :K], basis_values(K, x), axes=1)


def partial_sum_variance(K: int, x):
    """``sum_{k<=K} m_k(x)^2``, the variance of the partial sum."""
    return np.sum(basis_values(K, x) ** 2, axis=0)


def integrated_basis(K: int, x):
    """``int_0^x m_k(y) dy`` for k = 1..K; layout ``(K,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    n = np.arange(K).reshape((K,) + (1,) * x.ndim)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = math.sqrt(2.0 / math.pi) * np.sin(n * x) / n
    out[0] = x / math.sqrt(math.pi)
    return out


def brownian_motion(draw, x, K: int | None = None):
    """``W(x) = W'(indicator of [0, x]) = sum_k (int_0^x m_k) xi_k``, truncated to K modes."""
    v = _values(draw)
    K = v.shape[-1] if K is None else K
    return np.tensordot(v[..., :K], integrated_basis(K, x), axes=1)
