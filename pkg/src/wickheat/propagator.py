"""Exact spectral solution of the propagator system.

For the Neumann heat equation driven by ``u <> W'(x)`` the chaos
coefficients satisfy the lower-triangular system

    d/dt u_0     = u_0''                                     u_0(0) = u0
    d/dt u_alpha = u_alpha'' + sum_j sqrt(alpha_j) m_j u_{alpha - e_j},   u_alpha(0) = 0

Each cosine coefficient of each ``u_alpha`` is an :class:`ExpPoly` in
time, computed order by order with exact Duhamel integrals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chaos_index import MultiIndex, count_multiindices, enumerate_multiindices
from .exppoly import PRUNE_RTOL, ExpPoly, duhamel
from .simplex_integrals import stirling_envelope, variance_constant
from .spectral_basis import (
    SpectralFunction,
    TripleProductTable,
    basis_derivatives,
    basis_values,
    triple_products,
)

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "TruncationError",
    "ChaosField",
    "FundamentalField",
    "PositivityReport",
    "budget_count",
    "solve_propagator",
    "solve_fundamental",
    "positivity_certificate",
    "potential_solve",
    "variance_constant",
]

DEFAULT_BUDGET = 2_000_000


class BudgetExceeded(ValueError):
    """Raised when the number of (multi-index, mode) pairs exceeds the budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(f"budget exceeded: {count} (alpha, k) pairs > {budget}")
        self.count = count
        self.budget = budget


class TruncationError(KeyError):
    pass


def budget_count(N: int, K: int, M: int) -> int:
    return K * sum(count_multiindices(n, M) for n in range(N + 1))


@dataclass
class ChaosField:
    """Truncated chaos solution: ``coeffs[alpha][k]`` is an ExpPoly in time."""

    N: int
    K: int
    M: int
    u0: SpectralFunction
    coeffs: dict[MultiIndex, dict[int, ExpPoly]]
    pruned_mass: float = 0.0
    description: str = ""
    _flat: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def alphas(self) -> list[MultiIndex]:
        return list(self.coeffs)

    def alphas_of_order(self, n: int) -> list[MultiIndex]:
        return [a for a in self.coeffs if a.order == n]

    def _check(self, alpha: MultiIndex):
        if alpha not in self.coeffs:
            raise TruncationError(
                f"multi-index {alpha} outside truncation (N={self.N}, M={self.M})")

    def coefficient(self, alpha: MultiIndex) -> dict[int, ExpPoly]:
        self._check(alpha)
        return self.coeffs[alpha]

    @property
    def n_terms(self) -> int:
        return sum(len(p) for modes in self.coeffs.values() for p in modes.values())

    # vectorized evaluation --------------------------------------------
    def _flatten(self):
        if self._flat is None:
            index = {a: i for i, a in enumerate(self.coeffs)}
            rows = [(index[a], k - 1, lam, m, c)
                    for a, modes in self.coeffs.items()
                    for k, p in sorted(modes.items())
                    for (lam, m), c in p]
            arr = np.array(rows, dtype=float).reshape(-1, 5)
            flat_idx = (arr[:, 0].astype(int) * self.K + arr[:, 1].astype(int))
            self._flat = (index, flat_idx, arr[:, 2], arr[:, 3], arr[:, 4])
        return self._flat

    def spectral_values(self, t: float) -> np.ndarray:
        """Array ``U[i, k-1] = u_{alpha_i, k}(t)`` in the field's alpha order."""
        index, flat_idx, lam, m, c = self._flatten()
        vals = c * np.power(t, m) * np.exp(-lam * t)
        out = np.bincount(flat_idx, weights=vals, minlength=len(index) * self.K)
        return out.reshape(len(index), self.K)

    def values(self, t: float, x, derivative: bool = False) -> np.ndarray:
        """``u_alpha(t, x)`` (or its x-derivative) for every stored alpha; shape ``(n_alpha,) + x.shape``."""
        basis = basis_derivatives if derivative else basis_values
        return np.tensordot(self.spectral_values(t), basis(self.K, x), axes=1)

    def eval_coefficient(self, alpha: MultiIndex, t: float, x, derivative: bool = False):
        """``u_alpha(t, x) = sum_k u_{alpha,k}(t) m_k(x)``."""
        self._check(alpha)
        index = self._flatten()[0]
        row = self.spectral_values(t)[index[alpha]]
        basis = basis_derivatives if derivative else basis_values
        out = np.tensordot(row, basis(self.K, x), axes=1)
        return out if np.ndim(out) else float(out)

    def order_variance(self, n: int, t: float) -> float:
        """``sum_{|alpha|=n} ||u_alpha(t, .)||_0^2``."""
        if n > self.N:
            raise ValueError(f"order {n} above the field's cap N={self.N}")
        U = self.spectral_values(t)
        mask = np.array([a.order == n for a in self.coeffs])
        return float(np.sum(U[mask] ** 2))

    def order_variances(self, t: float) -> np.ndarray:
        U = self.spectral_values(t)
        orders = np.array([a.order for a in self.coeffs])
        return np.bincount(orders, weights=np.sum(U ** 2, axis=1), minlength=self.N + 1)

    def stirling_bound(self, n: int, t: float) -> float:
        return stirling_envelope(n, t) * self.u0.norm() ** 2

    def stirling_ratios(self, t: float) -> np.ndarray:
        """Computed order variance divided by ``C(t)^n n^(-n/2) ||u0||^2``."""
        v = self.order_variances(t)
        return np.array([v[n] / self.stirling_bound(n, t) for n in range(self.N + 1)])

    # export -----------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha_canonical_text", "k", "term_lambda", "term_degree", "term_coeff"])
        for a, modes in self.coeffs.items():
            for k in sorted(modes):
                for lam, m, c in modes[k].as_rows():
                    w.writerow([a.canonical_text(), k, lam, m, f"{c:.17g}"])
        return buf.getvalue()

    def metadata(self, times=(0.25, 1.0, 4.0)) -> dict:
        diag = []
        for t in times:
            v = self.order_variances(t)
            diag.append({
                "t": t,
                "C_t": variance_constant(t),
                "order_variance": [float(x) for x in v],
                "stirling_ratio": [float(x) for x in self.stirling_ratios(t)],
            })
        return {
            "N": self.N, "K": self.K, "M": self.M,
            "u0": self.description or "spectral",
            "u0_coeffs": [float(c) for c in self.u0.coeffs],
            "n_alpha": len(self.coeffs),
            "n_terms": self.n_terms,
            "pruned_mass": self.pruned_mass,
            "diagnostics": diag,
        }

    def metadata_json(self, times=(0.25, 1.0, 4.0)) -> str:
        return json.dumps(self.metadata(times), indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, text: str, meta: dict) -> "ChaosField":
        coeffs: dict[MultiIndex, dict[int, dict]] = {}
        for row in csv.DictReader(io.StringIO(text)):
            a = MultiIndex.parse(row["alpha_canonical_text"])
            modes = coeffs.setdefault(a, {})
            modes.setdefault(int(row["k"]), {})[
                (int(row["term_lambda"]), int(row["term_degree"]))] = float(row["term_coeff"])
        for a in enumerate_all(meta["N"], meta["M"]):
            coeffs.setdefault(a, {})
        ordered = {a: {k: ExpPoly(d) for k, d in sorted(coeffs[a].items())}
                   for a in enumerate_all(meta["N"], meta["M"])}
        return cls(meta["N"], meta["K"], meta["M"], SpectralFunction(meta["u0_coeffs"]),
                   ordered, meta.get("pruned_mass", 0.0), meta.get("u0", ""))


def enumerate_all(N: int, M: int) -> list[MultiIndex]:
    return [a for n in range(N + 1) for a in enumerate_multiindices(n, M)]


@dataclass
class FundamentalField(ChaosField):
    """Chaos solution with delta initial data at ``y``."""

    y: float = 0.0


def solve_propagator(u0: SpectralFunction, N: int, K: int, M: int, *,
                     budget: int = DEFAULT_BUDGET, prune_rtol: float = PRUNE_RTOL,
                     table: TripleProductTable | None = None,
                     description: str = "") -> ChaosField:
    """Solve the propagator for all ``|alpha| <= N`` with support in ``1..M``.

    Parameters
    ----------
    u0 : SpectralFunction
        Deterministic initial data; resized to ``K`` modes.
    N, K, M : int
        Chaos order cap, number of cosine modes in the solution, and
        number of Gaussian noise modes.  ``K >= 2 M`` avoids most
        truncation, since products shift wavenumbers upward.
    budget : int
        Maximum number of ``(alpha, k)`` pairs.
    prune_rtol : float
        Relative cutoff for dropping negligible ExpPoly terms.
    """
    if min(N, K, M) < 0 or K < 1 or M < 1:
        raise ValueError("need N >= 0 and K, M >= 1")
    count = budget_count(N, K, M)
    if count > budget:
        raise BudgetExceeded(count, budget)
    if table is None or table.K < max(K, M):
        table = triple_products(max(K, M))
    u0 = u0.resized(K)
    lam = [(k - 1) ** 2 for k in range(1, K + 1)]
    coeffs: dict[MultiIndex, dict[int, ExpPoly]] = {
        MultiIndex.zero(): {k: ExpPoly.exp(lam[k - 1], c)
                            for k, c in enumerate(u0.coeffs, start=1) if c != 0.0}
    }
    pruned = 0.0
    for n in range(1, N + 1):
        # each order reads only the sealed previous order
        for alpha in enumerate_multiindices(n, M):
            forcing: dict[int, dict] = {}
            for j, aj in alpha.items():
                w = math.sqrt(aj)
                for l, g in coeffs[alpha.minus_unit(j)].items():
                    ks, ts = table.partners(j, l)
                    for k, T in zip(ks, ts):
                        if k > K:
                            continue
                        acc = forcing.setdefault(int(k), {})
                        scale = w * T
                        for key, c in g.terms.items():
                            acc[key] = acc.get(key, 0.0) + scale * c
            modes = {}
            for k in sorted(forcing):
                p, lost = duhamel(ExpPoly(forcing[k]), lam[k - 1]).pruned(prune_rtol)
                pruned += lost
                if p:
                    modes[k] = p
            coeffs[alpha] = modes
    return ChaosField(N, K, M, u0, coeffs, pruned, description)


def solve_fundamental(y: float, N: int, K: int, M: int, **kwargs) -> FundamentalField:
    """Fundamental chaos solution: initial coefficients ``m_k(y)`` of the delta at ``y``."""
    if not 0.0 <= y <= math.pi:
        raise ValueError("source point must lie in [0, pi]")
    u0 = SpectralFunction(basis_values(K, y))
    f = solve_propagator(u0, N, K, M, description=f"delta(x - {y!r})", **kwargs)
    return FundamentalField(f.N, f.K, f.M, f.u0, f.coeffs, f.pruned_mass, f.description, y=y)


# ----------------------------------------------------------------------
# positivity certificate


def potential_solve(u0: SpectralFunction, h: SpectralFunction, K: int,
                    table: TripleProductTable | None = None) -> Callable[[float], np.ndarray]:
    """Galerkin solution of ``V_t = V_xx + h V`` with ``K`` modes.

    The Galerkin matrix is symmetric, so ``V(t) = Q exp(w t) Q^T V(0)`` is
    exact for the truncated system.  Returns ``t -> coefficient vector``.
    """
    if table is None or table.K < max(K, h.K):
        table = triple_products(max(K, h.K))
    A = -np.diag(np.arange(K, dtype=float) ** 2)
    H = table.multiplication_matrix(h.coeffs)[:K, :K]
    w, Q = np.linalg.eigh(A + H)
    v0 = Q.T @ u0.resized(K).coeffs
    return lambda t: Q @ (np.exp(w * t) * v0)


@dataclass
class PositivityReport:
    """Deterministic ``V(t,x;h)`` check plus chaos reconstruction gaps by order."""

    min_value: float
    min_value_fine: float
    gaps: np.ndarray
    times: np.ndarray
    xs: np.ndarray

    @property
    def monotone(self) -> bool:
        g = self.gaps
        floor = 1e-12 * max(1.0, float(g[0]))
        return bool(all(b <= a or b <= floor for a, b in zip(g[:-1], g[1:])))


def positivity_certificate(u0: SpectralFunction, h: SpectralFunction, T: float = 1.0, *,
                           N: int = 6, K: int = 32, M: int | None = None,
                           n_t: int = 21, n_x: int = 65, field: ChaosField | None = None,
                           fine_factor: int = 4) -> PositivityReport:
    """Check that ``V_t = V_xx + h V``, ``V(0) = u0`` stays non-negative, and that

    ``sum_{|alpha|<=n} h^alpha u_alpha / sqrt(alpha!)`` converges to it as ``n`` grows.
    """
    ts = np.linspace(0.0, T, n_t)
    xs = np.linspace(0.0, math.pi, n_x)
    if np.min(u0(xs)) < -1e-12:
        raise ValueError("positivity certificate requires non-negative data")
    hc = h.coeffs
    nz = np.nonzero(hc)[0]
    band = int(nz[-1]) + 1 if nz.size else 1
    M = band if M is None else M
    if band > M:
        raise ValueError(f"potential has modes up to {band}, beyond the noise cap M={M}")
    if field is None:
        field = solve_propagator(u0, N, K, M)
    K = field.K
    table = triple_products(fine_factor * K)

    Bx = basis_values(K, xs)
    exact = potential_solve(u0, h, K, table)
    fine = potential_solve(u0, h, fine_factor * K, table)
    Bx_fine = basis_values(fine_factor * K, xs)

    hpad = np.zeros(field.M)
    hpad[:min(field.M, hc.size)] = hc[:field.M]
    weights = np.array([
        math.prod(hpad[k - 1] ** a for k, a in alpha.items()) / math.sqrt(alpha.factorial())
        for alpha in field.coeffs])
    orders = np.array([a.order for a in field.coeffs])

    gaps = np.zeros(field.N + 1)
    vmin = vmin_fine = math.inf
    for t in ts:
        V = exact(t) @ Bx
        vmin = min(vmin, float(V.min()))
        vmin_fine = min(vmin_fine, float((fine(t) @ Bx_fine).min()))
        U = field.spectral_values(t)
        partial = np.zeros(K)
        for n in range(field.N + 1):
            partial = partial + weights[orders == n] @ U[orders == n]
            gaps[n] = max(gaps[n], float(np.max(np.abs(partial @ Bx - V))))
    return PositivityReport(vmin, vmin_fine, gaps, ts, xs)
