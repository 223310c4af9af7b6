"""
Increment exponents of the additive and multiplicative fields
=============================================================

Second moments of increments are computed from coefficients. The
log-log slope over dyadic lags gives the almost-Hoelder exponent.
"""

# %%
import numpy as np

from wickheat import SpectralFunction, solve_propagator
from wickheat.regularity import (
    additive_increment_curves,
    dyadic_lags,
    kolmogorov_exponent,
    space_increment_curve,
)

x = np.pi / 2
lags = dyadic_lags(4, 14)

# %%
# Additive benchmark, untruncated series. The space derivative has slope
# near 1, i.e. exponent 1/2. At a fixed t > 0 the field is smooth in time,
# so the time slope is near 2; the 3/2 law appears only as t -> 0.
tc, sc = additive_increment_curves(None, 0.5, x, lags)
print(f"t=0.5  time slope {tc.slope:.3f}  U_x slope {sc.slope:.3f}")
t0, _ = additive_increment_curves(None, 0.0, x, lags)
print(f"t=0    time slope {t0.slope:.3f}")
print(kolmogorov_exponent(sc).to_json())

# %%
# Multiplicative field: the u_x slope matches once lags are resolved by
# the spectral truncation (h K >= 8).  For K = 256 that is h >= 2^-5.
K = M = 256
field = solve_propagator(SpectralFunction.constant(K), 2, K, M, budget=10 ** 8)
ms = space_increment_curve(field, 1.0, x, dyadic_lags(2, 5), derivative=True)
print(f"multiplicative u_x slope {ms.slope:.3f} over h in [{ms.lags[-1]:.3g}, {ms.lags[0]:.3g}]")
