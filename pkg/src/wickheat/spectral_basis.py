"""Cosine eigenbasis of the Neumann Laplacian on (0, pi).

Basis functions are 1-based: ``m_1 = 1/sqrt(pi)`` and
``m_k(x) = sqrt(2/pi) cos((k-1) x)`` for ``k >= 2``, so ``m_k`` has
wavenumber ``k - 1`` and eigenvalue ``-(k-1)**2`` under d^2/dx^2.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc

__all__ = [
    "DEFAULT_K",
    "MIN_KERNEL_TIME",
    "CosineBasis",
    "SpectralFunction",
    "TripleProductTable",
    "KernelBoundsReport",
    "basis_values",
    "basis_derivatives",
    "composite_gauss_legendre",
    "heat_kernel",
    "heat_kernel_x",
    "heat_kernel_xx",
    "heat_kernel_t",
    "heat_kernel_tail",
    "heat_kernel_images",
    "kernel_bounds_check",
    "lambda_pow",
    "sobolev_norm",
    "r_gamma_kernel",
    "c_gamma",
    "triple_product",
    "triple_products",
]

DEFAULT_K = 64
MIN_KERNEL_TIME = 1e-4

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2_PI = math.sqrt(2.0 / math.pi)


def _wavenumbers(K: int) -> np.ndarray:
    return np.arange(K)


def basis_values(K: int, x) -> np.ndarray:
    """Matrix ``B[k-1, i] = m_k(x_i)`` of shape ``(K,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    n = _wavenumbers(K).reshape((K,) + (1,) * x.ndim)
    out = _SQRT_2_PI * np.cos(n * x)
    out[0] = 1.0 / _SQRT_PI
    return out


def basis_derivatives(K: int, x) -> np.ndarray:
    """``m_k'(x) = -(k-1) sqrt(2/pi) sin((k-1) x)``, same layout as :func:`basis_values`."""
    x = np.asarray(x, dtype=float)
    n = _wavenumbers(K).reshape((K,) + (1,) * x.ndim)
    return -n * _SQRT_2_PI * np.sin(n * x)


@dataclass(frozen=True)
class CosineBasis:
    """First ``K`` cosine modes with their Neumann eigenvalues."""

    K: int = DEFAULT_K

    @property
    def eigenvalues(self) -> np.ndarray:
        """Decay rates ``(k-1)**2``, k = 1..K, as integers."""
        return _wavenumbers(self.K) ** 2

    def __call__(self, x) -> np.ndarray:
        return basis_values(self.K, x)

    def derivative(self, x) -> np.ndarray:
        return basis_derivatives(self.K, x)

    def project(self, f, panels: int = 8, nodes: int = 64) -> "SpectralFunction":
        """Cosine coefficients of a callable by composite Gauss-Legendre quadrature."""
        xq, wq = composite_gauss_legendre(panels, nodes)
        return SpectralFunction(basis_values(self.K, xq) @ (wq * f(xq)))


def composite_gauss_legendre(panels: int = 8, nodes: int = 64, a: float = 0.0,
                             b: float = math.pi):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    z, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * z[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return x, wt


# ----------------------------------------------------------------------
# spectral functions and Sobolev scale


@dataclass
class SpectralFunction:
    """A function on (0, pi) given by its coefficients against ``m_1..m_K``."""

    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))

    @classmethod
    def constant(cls, K: int = DEFAULT_K) -> "SpectralFunction":
        """The first basis function, ``m_1 = 1/sqrt(pi)``."""
        return cls.mode(1, K)

    @classmethod
    def mode(cls, k: int, K: int = DEFAULT_K, amplitude: float = 1.0) -> "SpectralFunction":
        if not 1 <= k <= K:
            raise ValueError(f"mode {k} outside 1..{K}")
        c = np.zeros(K)
        c[k - 1] = amplitude
        return cls(c)

    @classmethod
    def random_band_limited(cls, n_modes: int, K: int = DEFAULT_K, seed: int = 0,
                            norm: float | None = 1.0) -> "SpectralFunction":
        rng = np.random.default_rng(seed)
        c = np.zeros(K)
        c[:n_modes] = rng.standard_normal(n_modes)
        if norm is not None:
            c *= norm / np.linalg.norm(c)
        return cls(c)

    @property
    def K(self) -> int:
        return self.coeffs.size

    def __call__(self, x):
        return np.tensordot(self.coeffs, basis_values(self.K, x), axes=1)

    def derivative(self, x):
        return np.tensordot(self.coeffs, basis_derivatives(self.K, x), axes=1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def sobolev_norm(self, gamma: float) -> float:
        return sobolev_norm(self, gamma)

    def resized(self, K: int) -> "SpectralFunction":
        c = np.zeros(K)
        n = min(K, self.K)
        c[:n] = self.coeffs[:n]
        return SpectralFunction(c)

    def __add__(self, other):
        K = max(self.K, other.K)
        return SpectralFunction(self.resized(K).coeffs + other.resized(K).coeffs)

    def __mul__(self, a: float):
        return SpectralFunction(a * self.coeffs)

    __rmul__ = __mul__

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "coeff"])
        for k, c in enumerate(self.coeffs, start=1):
            w.writerow([k, f"{c:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpectralFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0][0] == "k":
            rows = rows[1:]
        K = max(int(r[0]) for r in rows)
        c = np.zeros(K)
        for k, v in rows:
            c[int(k) - 1] = float(v)
        return cls(c)


def _lambda_symbol(K: int, gamma: float) -> np.ndarray:
    return (1.0 + _wavenumbers(K).astype(float) ** 2) ** (gamma / 2.0)


def lambda_pow(f: SpectralFunction, gamma: float) -> SpectralFunction:
    """Apply ``(I - d^2/dx^2)**(gamma/2)`` coefficient-wise."""
    return SpectralFunction(f.coeffs * _lambda_symbol(f.K, gamma))


def sobolev_norm(f: SpectralFunction, gamma: float) -> float:
    return float(np.linalg.norm(lambda_pow(f, gamma).coeffs))


def r_gamma_kernel(gamma: float, x, y, K: int = DEFAULT_K):
    """Truncated kernel of the inverse operator, sum_k (1+(k-1)^2)^(-gamma/2) m_k(x) m_k(y)."""
    if gamma <= 0.5:
        raise ValueError("kernel not square-integrable")
    w = _lambda_symbol(K, -gamma)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    bx = basis_values(K, x)
    by = basis_values(K, y)
    return np.tensordot(w, bx * by, axes=1)


def c_gamma(gamma: float, terms: int = 100_000) -> tuple[float, float]:
    """``(2/pi) sum_{k>=0} (1+k^2)^(-gamma)`` as a partial sum plus integral tail bound.

    Returns ``(partial_sum, tail_bound)``; the exact constant lies in
    ``[partial_sum, partial_sum + tail_bound]``.
    """
    if gamma <= 0.5:
        raise ValueError("kernel not square-integrable")
    k = np.arange(terms, dtype=float)
    partial = (2.0 / math.pi) * float(np.sum((1.0 + k * k) ** -gamma))
    n = terms - 1
    tail = (2.0 / math.pi) * n ** (1.0 - 2.0 * gamma) / (2.0 * gamma - 1.0)
    return partial, tail


# ----------------------------------------------------------------------
# heat kernel


def _check_time(t: float, min_time: float):
    if t <= 0:
        raise ValueError("kernel requires positive time")
    if t < min_time:
        raise ValueError(
            f"kernel evaluation at t={t:g} below min_time={min_time:g}; "
            "pass a smaller min_time and a larger K explicitly")


def heat_kernel_tail(t: float, K: int = DEFAULT_K, r: int = 0) -> float:
    """Bound on ``(2/pi) sum_{k>=K} k^r exp(-k^2 t)``, the neglected part of the kernel series.

    Only ``r = 0`` uses the sharp erfc form; ``r >= 1`` uses an
    integral-comparison bound valid once ``K^2 t > r/2``.
    """
    if r == 0:
        s = math.exp(-K * K * t) + 0.5 * math.sqrt(math.pi / t) * erfc(K * math.sqrt(t))
        return (2.0 / math.pi) * s
    k = np.arange(K, K + 200_000, dtype=float)
    return (2.0 / math.pi) * float(np.sum(k ** r * np.exp(-k * k * t)))


def _kernel_series(t, x, y, K, fx, fy, power):
    n = _wavenumbers(K).astype(float)
    w = np.exp(-n * n * t) * n ** power
    return np.tensordot(w, fx(K, x) * fy(K, y), axes=1)


def heat_kernel(t: float, x, y, K: int = DEFAULT_K, *, return_tail: bool = False,
                min_time: float = MIN_KERNEL_TIME):
    """Neumann heat kernel ``p(t,x,y) = sum_k exp(-(k-1)^2 t) m_k(x) m_k(y)``.

    Parameters
    ----------
    t : float
        Positive time.
    x, y : float or array_like
        Points in ``[0, pi]``; broadcast against each other.
    K : int
        Number of basis functions kept.
    return_tail : bool
        Also return the bound on the omitted terms.
    min_time : float
        Evaluations below this time are refused, since the required K
        grows like ``t**-0.5``.
    """
    _check_time(t, min_time)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    val = _kernel_series(t, x, y, K, basis_values, basis_values, 0)
    val = val if val.ndim else float(val)
    if return_tail:
        return val, heat_kernel_tail(t, K)
    return val


def heat_kernel_x(t, x, y, K=DEFAULT_K, *, min_time=MIN_KERNEL_TIME):
    """Partial derivative of the kernel in ``x``."""
    _check_time(t, min_time)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return _kernel_series(t, x, y, K, basis_derivatives, basis_values, 0)


def heat_kernel_xx(t, x, y, K=DEFAULT_K, *, min_time=MIN_KERNEL_TIME):
    _check_time(t, min_time)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    return -_kernel_series(t, x, y, K, basis_values, basis_values, 2)


def heat_kernel_t(t, x, y, K=DEFAULT_K, *, min_time=MIN_KERNEL_TIME):
    # p_t = p_xx for the heat semigroup; computed from the series separately
    _check_time(t, min_time)
    n = _wavenumbers(K).astype(float)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    w = -(n * n) * np.exp(-n * n * t)
    return np.tensordot(w, basis_values(K, x) * basis_values(K, y), axes=1)


def heat_kernel_images(t: float, x, y, n_images: int = 20):
    """Method-of-images form of the same kernel, independent of the cosine series."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    shifts = 2.0 * math.pi * np.arange(-n_images, n_images + 1)
    shifts = shifts.reshape((-1,) + (1,) * x.ndim)
    g = lambda z: np.exp(-z * z / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
    val = np.sum(g(x - y + shifts) + g(x + y + shifts), axis=0)
    return val if val.ndim else float(val)


@dataclass
class KernelBoundsReport:
    """Worst grid violations of the pointwise kernel bounds (positive means violated)."""

    t: float
    K: int
    min_value: float
    upper: float
    grad: float
    second: float
    time_derivative: float
    tail: float

    @property
    def max_violation(self) -> float:
        return max(self.upper, self.grad, self.second, self.time_derivative, -self.min_value)

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("t", "K", "min_value", "upper", "grad", "second", "time_derivative", "tail")}


def kernel_bounds_check(t: float, K: int = DEFAULT_K, n_grid: int = 201,
                        min_time: float = MIN_KERNEL_TIME) -> KernelBoundsReport:
    """Sample ``p``, ``p_x``, ``p_xx``, ``p_t`` on a square grid and compare with

    ``0 <= p <= (sqrt(t)+1)/sqrt(t)``, ``|p_x| <= 4/t``,
    ``|p_xx| <= 27 t^(-3/2)`` and ``|p_t| <= 27 t^(-3/2)``.
    """
    g = np.linspace(0.0, math.pi, n_grid)
    X, Y = np.meshgrid(g, g, indexing="ij")
    p = heat_kernel(t, X, Y, K, min_time=min_time)
    px = heat_kernel_x(t, X, Y, K, min_time=min_time)
    pxx = heat_kernel_xx(t, X, Y, K, min_time=min_time)
    pt = heat_kernel_t(t, X, Y, K, min_time=min_time)
    st = math.sqrt(t)
    return KernelBoundsReport(
        t=t, K=K,
        min_value=float(p.min()),
        upper=float((p - (st + 1.0) / st).max()),
        grad=float((np.abs(px) - 4.0 / t).max()),
        second=float((np.abs(pxx) - 27.0 / t ** 1.5).max()),
        time_derivative=float((np.abs(pt) - 27.0 / t ** 1.5).max()),
        tail=heat_kernel_tail(t, K),
    )


# ----------------------------------------------------------------------
# triple products  T[j,l,k] = int_0^pi m_j m_l m_k dx


# normalization product by number of zero wavenumbers, so the table is exactly symmetric
_NORM3 = np.array([_SQRT_2_PI ** 3, _SQRT_2_PI ** 2 / _SQRT_PI, _SQRT_2_PI / math.pi,
                   1.0 / _SQRT_PI ** 3]) * (math.pi / 4.0)


def triple_product(j: int, l: int, k: int) -> float:
    """Closed form of ``int_0^pi m_j m_l m_k dx`` via product-to-sum identities."""
    a, b, c = j - 1, l - 1, k - 1
    hits = (a + b + c == 0) + (a + b - c == 0) + (a - b + c == 0) + (a - b - c == 0)
    if not hits:
        return 0.0
    return float(_NORM3[(a == 0) + (b == 0) + (c == 0)] * hits)


_CACHE_MAGIC = b"WHTP"
_CACHE_VERSION = 1


@dataclass
class TripleProductTable:
    """Triple products for indices ``1..K``.

    Only ``k - 1 in {a + b, |a - b|}`` can be non-zero for ``j - 1 = a``,
    ``l - 1 = b``, so partner lists and multiplication matrices are built
    from the closed form directly; the dense ``values`` array is
    materialised on first access only.
    """

    K: int
    _values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self._partners = {}

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            n = np.arange(self.K)
            A, B, C = np.meshgrid(n, n, n, indexing="ij", sparse=True)
            hits = ((A + B + C == 0).astype(int) + (A + B - C == 0) + (A - B + C == 0)
                    + (A - B - C == 0))
            zeros = (A == 0).astype(int) + (B == 0) + (C == 0)
            self._values = _NORM3[zeros] * hits
        return self._values

    def __getitem__(self, idx):
        j, l, k = idx
        if not all(1 <= i <= self.K for i in idx):
            raise IndexError("triple-product index out of range")
        return triple_product(j, l, k)

    def partners(self, j: int, l: int):
        """Indices ``k <= K`` with ``T[j,l,k] != 0`` and the corresponding values."""
        key = (j, l)
        hit = self._partners.get(key)
        if hit is None:
            a, b = j - 1, l - 1
            ks = sorted({c + 1 for c in (a + b, abs(a - b)) if c < self.K})
            if not (1 <= j <= self.K and 1 <= l <= self.K):
                ks = []
            hit = (np.array(ks, dtype=int), np.array([triple_product(j, l, k) for k in ks]))
            self._partners[key] = hit
        return hit

    def multiplication_matrix(self, h: np.ndarray) -> np.ndarray:
        """Galerkin matrix of ``f -> h f``: ``H[k,l] = sum_j h_j T[j,l,k]``."""
        h = np.asarray(h, float)
        n = min(h.size, self.K)
        H = np.zeros((self.K, self.K))
        for j in range(1, n + 1):
            if h[j - 1] == 0.0:
                continue
            for l in range(1, self.K + 1):
                ks, ts = self.partners(j, l)
                H[ks - 1, l - 1] += h[j - 1] * ts
        return H

    def save(self, path) -> None:
        header = _CACHE_MAGIC + struct.pack("<II", _CACHE_VERSION, self.K)
        Path(path).write_bytes(header + np.ascontiguousarray(self.values, "<f8").tobytes())

    @classmethod
    def load(cls, path) -> "TripleProductTable":
        raw = Path(path).read_bytes()
        if raw[:4] != _CACHE_MAGIC:
            raise ValueError("not a triple-product cache file")
        version, K = struct.unpack("<II", raw[4:12])
        if version != _CACHE_VERSION:
            raise ValueError(f"unsupported cache version {version}")
        vals = np.frombuffer(raw[12:], dtype="<f8").reshape(K, K, K).copy()
        return cls(K, vals)


def triple_products(K: int) -> TripleProductTable:
    """Closed-form triple-product table for ``j, l, k <= K``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return TripleProductTable(K)
