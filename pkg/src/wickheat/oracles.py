"""Independent numerical oracles used to verify the exact solvers.

Nothing here touches :mod:`wickheat.exppoly` or the closed-form triple
products: time integrals are done by adaptive or Gauss-Jacobi
quadrature, and the multiplication operators by Gauss-Legendre
quadrature in space.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import roots_jacobi

from .chaos_index import MultiIndex, characteristic_set
from .spectral_basis import SpectralFunction, basis_values, composite_gauss_legendre

__all__ = [
    "multiplication_matrices_quadrature",
    "iterated_integral_coefficient",
    "simplex_quadrature",
]


def multiplication_matrices_quadrature(K: int, M: int, panels: int = 8,
                                       nodes: int = 64) -> np.ndarray:
    """``P[j-1, k-1, l-1] = int m_j m_k m_l dx`` by composite Gauss-Legendre."""
    xq, wq = composite_gauss_legendre(panels, nodes)
    bk = basis_values(K, xq)
    bj = basis_values(M, xq)
    return np.einsum("jq,kq,lq,q->jkl", bj, bk, bk, wq)


def iterated_integral_coefficient(alpha: MultiIndex, u0: SpectralFunction, t: float, x,
                                  K: int, epsrel: float = 1e-11):
    """Chaos coefficient from the iterated-integral representation

        u_alpha(t) = 1/sqrt(alpha!) sum_{sigma} int_{0<s_1<..<s_n<t}
            Phi_{t-s_n} M_{k_sigma(n)} ... Phi_{s_2-s_1} M_{k_sigma(1)} Phi_{s_1} u0 ds

    evaluated by nested adaptive quadrature (``scipy.integrate.quad_vec``)
    over the time simplex, with ``K`` cosine modes in space.
    """
    u0c = u0.resized(K).coeffs
    lam = np.arange(K, dtype=float) ** 2
    bx = basis_values(K, x)
    if alpha.order == 0:
        return np.tensordot(np.exp(-lam * t) * u0c, bx, axes=1)
    ks = characteristic_set(alpha)
    P = multiplication_matrices_quadrature(K, max(ks))

    def chain(order, s_hi):
        # vector  int_{0<s_1<..<s_m<s_hi} Phi M_{order[m-1]} ... Phi M_{order[0]} Phi u0
        m = len(order)
        if m == 0:
            return np.exp(-lam * s_hi) * u0c
        Mk = P[order[-1] - 1]

        def integrand(s):
            return np.exp(-lam * (s_hi - s)) * (Mk @ chain(order[:-1], s))

        if s_hi == 0.0:
            return np.zeros(K)
        return quad_vec(integrand, 0.0, s_hi, epsrel=epsrel, epsabs=1e-15)[0]

    total = np.zeros(K)
    for perm in permutations(ks):
        total += chain(perm, t)
    total /= math.sqrt(alpha.factorial())
    out = np.tensordot(total, bx, axes=1)
    return out if np.ndim(out) else float(out)


def _gj_unit(q: int, c: float):
    """Nodes/weights for ``int_0^1 (1-w)^(-c) f(w) dw``."""
    z, W = roots_jacobi(q, -c, 0.0)
    return 0.5 * (1.0 + z), W * 2.0 ** (c - 1.0)


def simplex_quadrature(n: int, t: float, alpha: float, beta: float, nodes: int = 40,
                       power: int = 4) -> float:
    """Nested Gauss-Jacobi evaluation of the simplex integral ``I_n(t; alpha, beta)``.

    Each level ``G_m(s) = int_0^s (s-u)^(-c_m) G_{m-1}(u) du`` is mapped by
    ``u = s w**power``; the kernel singularity at ``w = 1`` goes into a
    Jacobi weight and the algebraic behaviour at ``w = 0`` becomes an
    integer power whenever the exponents are multiples of ``1/power``.
    """
    if n < 1:
        raise ValueError("depth must be >= 1")
    p = power
    exps = [0.25] * (n - 1) + [alpha]
    rules = [_gj_unit(nodes, c) for c in exps]

    def G(m, s):
        if m == 0:
            return s ** (-beta)
        c = exps[m - 1]
        w, W = rules[m - 1]
        u = s[..., None] * w ** p
        g = G(m - 1, u)
        poly = sum(w ** i for i in range(p))
        integrand = poly ** (-c) * p * w ** (p - 1) * g
        return s ** (1.0 - c) * np.sum(W * integrand, axis=-1)

    return float(G(n, np.array(float(t))))
