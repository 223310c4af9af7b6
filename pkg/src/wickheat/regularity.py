"""Second moments of increments and log-log exponent fits.

All curves are computed from coefficients, never from sampled paths:
for a chaos field ``E|u(t+h,x) - u(t,x)|^2 = sum_alpha |u_alpha(t+h,x) - u_alpha(t,x)|^2``
by orthonormality of the chaos basis, and the additive benchmark has
closed-form series.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .propagator import ChaosField
from .spectral_basis import basis_derivatives, basis_values

__all__ = [
    "RESIDUAL_GATE",
    "ScalingRegimeError",
    "IncrementCurve",
    "HolderEstimate",
    "dyadic_lags",
    "resolved_lags",
    "fit_loglog",
    "time_increment_curve",
    "space_increment_curve",
    "additive_time_increments",
    "additive_space_increments",
    "additive_increment_curves",
    "kolmogorov_exponent",
]

#: max RMS residual of the log10-log10 fit
RESIDUAL_GATE = 0.02
_FULL_SERIES_MODES = 1 << 20


class ScalingRegimeError(ValueError):
    pass


def dyadic_lags(coarse: int = 4, fine: int = 14, scale: float = 1.0) -> np.ndarray:
    """``scale * 2**-j`` for ``j = coarse..fine``, decreasing."""
    return scale * 2.0 ** -np.arange(coarse, fine + 1, dtype=float)


def resolved_lags(K: int, t: float = 1.0, coarse: int = 4, fine: int = 14,
                  modes_per_lag: float = 8.0) -> np.ndarray:
    """Default dyadic grid ``2**-j * min(t, 1)`` cut where ``h * K < modes_per_lag``.

    Below roughly ``1/K`` a ``K``-mode partial sum is smooth and every
    increment curve bends to slope 2, so those lags are dropped.
    """
    lags = dyadic_lags(coarse, fine, min(t, 1.0))
    keep = lags * K >= modes_per_lag
    if keep.sum() < 3:
        raise ValueError(f"K={K} resolves fewer than three lags of the grid")
    return lags[keep]


def _check_lags(lags) -> np.ndarray:
    lags = np.asarray(lags, dtype=float)
    if lags.ndim != 1 or lags.size < 2 or np.any(lags <= 0) or np.any(np.diff(lags) >= 0):
        raise ValueError("lags must be positive and strictly decreasing")
    return lags


def fit_loglog(lags, values):
    """OLS of ``log10 S`` on ``log10 h``: returns ``(slope, intercept, rms_residual)``."""
    lags = np.asarray(lags, float)
    values = np.asarray(values, float)
    if np.any(values <= 0):
        return math.nan, math.nan, math.nan
    X, Y = np.log10(lags), np.log10(values)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))


@dataclass
class IncrementCurve:
    """Second moments ``S(h)`` of increments along one axis, with a log-log fit."""

    axis: str
    t: float
    x: float
    lags: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    residual: float
    derivative: bool = False
    model: str = "multiplicative"

    @classmethod
    def fitted(cls, axis, t, x, lags, values, **kw) -> "IncrementCurve":
        slope, icpt, res = fit_loglog(lags, values)
        return cls(axis, float(t), float(x), np.asarray(lags, float), np.asarray(values, float),
                   slope, icpt, res, **kw)

    def within_gate(self, gate: float = RESIDUAL_GATE) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= gate)

    def window(self, coarse_drop: int = 0, fine_drop: int = 0) -> "IncrementCurve":
        """Refit on a sub-range of lags."""
        sl = slice(coarse_drop, self.lags.size - fine_drop)
        return IncrementCurve.fitted(self.axis, self.t, self.x, self.lags[sl], self.values[sl],
                                     derivative=self.derivative, model=self.model)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "S", "loglog_residual"])
        for h, s in zip(self.lags, self.values):
            r = (math.log10(s) - (self.slope * math.log10(h) + self.intercept)
                 if s > 0 and np.isfinite(self.slope) else math.nan)
            w.writerow([f"{h:.17g}", f"{s:.17g}", f"{r:.17g}"])
        return buf.getvalue()

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("lags", "values")}
        d["lag_range"] = [float(self.lags[-1]), float(self.lags[0])]
        d["within_gate"] = self.within_gate()
        return d


def time_increment_curve(field: ChaosField, t: float, x: float, lags) -> IncrementCurve:
    """``S(h) = sum_{|alpha|<=N} (u_alpha(t+h,x) - u_alpha(t,x))^2``."""
    lags = _check_lags(lags)
    if t <= 0:
        raise ValueError("time increments need t > 0")
    bx = basis_values(field.K, x)
    base = field.spectral_values(t) @ bx
    S = np.array([np.sum((field.spectral_values(t + h) @ bx - base) ** 2) for h in lags])
    return IncrementCurve.fitted("time", t, x, lags, S)


def space_increment_curve(field: ChaosField, t: float, x: float, lags,
                          derivative: bool = False) -> IncrementCurve:
    """Spatial increments of ``u`` (or of ``u_x`` when ``derivative``) at fixed ``t``."""
    lags = _check_lags(lags)
    if t <= 0:
        raise ValueError("space increments need t > 0")
    if not (0.0 < x and x + lags[0] < math.pi):
        raise ValueError("x and x + max lag must lie in (0, pi)")
    basis = basis_derivatives if derivative else basis_values
    U = field.spectral_values(t)
    pts = np.concatenate([[x], x + lags])
    vals = U @ basis(field.K, pts)  # (n_alpha, 1 + L)
    S = np.sum((vals[:, 1:] - vals[:, :1]) ** 2, axis=0)
    return IncrementCurve.fitted("space", t, x, lags, S, derivative=derivative)


# ----------------------------------------------------------------------
# additive benchmark, closed-form series


def _modes_for(t: float, K: int | None) -> int:
    if K is not None:
        return K
    if t <= 0:
        return _FULL_SERIES_MODES
    # exp(-2 k^2 t) below 1e-40 beyond this k; past 2^20 modes the k^-4
    # tail is below 1e-18 and the sum is complete to double precision
    return min(int(math.ceil(math.sqrt(92.1 / (2 * t)))) + 2, _FULL_SERIES_MODES)


def additive_time_increments(t: float, x: float, lags, K: int | None = None) -> np.ndarray:
    """``E|U~(t+h,x) - U~(t,x)|^2 = (2/pi) sum_k k^-4 e^{-2k^2 t} (1-e^{-k^2 h})^2 cos^2(kx)``.

    ``K=None`` sums the full series (to double precision).
    """
    lags = np.asarray(lags, float)
    k = np.arange(1, _modes_for(t, K) + 1, dtype=float)[:, None]
    w = k ** -4 * np.exp(-2 * k * k * t) * np.cos(k * x) ** 2
    return (2.0 / math.pi) * np.sum(w * (-np.expm1(-k * k * lags[None, :])) ** 2, axis=0)


def _clausen2_cos(theta):
    """``sum_{k>=1} cos(k theta) / k^2`` for real theta (closed form)."""
    th = np.mod(np.asarray(theta, float), 2 * math.pi)
    return math.pi ** 2 / 6 - math.pi * th / 2 + th ** 2 / 4


def additive_space_increments(t: float, x: float, lags, K: int | None = None) -> np.ndarray:
    """``E|U_x(t,x+h) - U_x(t,x)|^2 = (2/pi) sum_k k^-2 (1-e^{-k^2 t})^2 (sin k(x+h) - sin kx)^2``.

    For ``K=None`` the ``t``-independent part is summed in closed form,
    which gives ``h - h^2/pi`` (the Brownian-bridge increment variance),
    and the remainder ``(1-e^{-k^2 t})^2 - 1`` decays like ``e^{-k^2 t}``.
    """
    lags = np.asarray(lags, float)
    if K is not None:
        k = np.arange(1, K + 1, dtype=float)[:, None]
        d = np.sin(k * (x + lags[None, :])) - np.sin(k * x)
        return (2.0 / math.pi) * np.sum(k ** -2 * (1 - np.exp(-k * k * t)) ** 2 * d ** 2, axis=0)
    a, b = x + lags, x
    full = (_clausen2_cos(0.0) - 0.5 * _clausen2_cos(2 * a) - 0.5 * _clausen2_cos(2 * b)
            - _clausen2_cos(lags) + _clausen2_cos(2 * x + lags))
    k = np.arange(1, _modes_for(t / 2, None) + 1, dtype=float)[:, None]
    r = np.expm1(-k * k * t) ** 2 - 1.0  # (1 - e^{-k^2 t})^2 - 1
    d = np.sin(k * (x + lags[None, :])) - np.sin(k * x)
    corr = np.sum(k ** -2 * r * d ** 2, axis=0)
    return (2.0 / math.pi) * (full + corr)


def additive_increment_curves(K: int | None, t: float, x: float, lags):
    """Time curve for ``U - zeta_0 t/pi`` and space curve for ``U_x``.

    ``K=None`` uses the untruncated series; an integer ``K`` keeps the
    cosine modes ``1..K`` only (matching a chaos field with ``M = K+1``
    noise modes).
    """
    lags = _check_lags(lags)
    if not (0.0 < x and x + lags[0] < math.pi):
        raise ValueError("x and x + max lag must lie in (0, pi)")
    tc = IncrementCurve.fitted("time", t, x, lags, additive_time_increments(t, x, lags, K),
                               model="additive")
    sc = IncrementCurve.fitted("space", t, x, lags, additive_space_increments(t, x, lags, K),
                               derivative=True, model="additive")
    return tc, sc


# ----------------------------------------------------------------------


@dataclass
class HolderEstimate:
    """Almost-Hoelder exponent read off a second-moment slope.

    ``exponent`` is the ``q -> inf`` limit ``slope/2``; ``window`` is
    ``(slope/2 - 1/q, slope/2)`` for the requested moment order ``q``.
    """

    slope: float
    exponent: float
    moment_order: float
    window: tuple[float, float]
    differentiable: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def kolmogorov_exponent(curve: IncrementCurve, q_mom: float = 64.0,
                        residual_gate: float = RESIDUAL_GATE,
                        differentiable_slope: float = 1.9) -> HolderEstimate:
    """Turn a fitted slope into a Kolmogorov-criterion exponent.

    For Gaussian or finite-chaos fields the ``q``-th moment of an increment
    scales like the second moment to the power ``q/2``, so
    ``E|dX|^q <= C h^(q slope/2)`` and the criterion gives the exponent
    ``(q slope/2 - 1)/q``.
    """
    if not curve.within_gate(residual_gate):
        raise ScalingRegimeError(
            f"curve not in scaling regime (residual {curve.residual:.3g} > {residual_gate})")
    if q_mom <= 0:
        raise ValueError("moment order must be positive")
    lim = curve.slope / 2.0
    lo = lim - 1.0 / q_mom
    return HolderEstimate(curve.slope, lim, q_mom, (lo, lim), curve.slope >= differentiable_slope)
