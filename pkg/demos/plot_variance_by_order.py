"""
Chaos coefficients and the variance of each order
=================================================

Solve the propagator for a constant initial condition and compare the
variance carried by each chaos order against the Stirling envelope.
"""

# %%
import numpy as np

from wickheat import SpectralFunction, solve_propagator
from wickheat.stochastic_field import exact_second_moment

K, M, N = 16, 6, 4
u0 = SpectralFunction.constant(K)
field = solve_propagator(u0, N, K, M)
print(field.n_terms, "multi-indices up to order", N)

# %%
# Integrated variance per order and its ratio to the envelope ``C(t)^n n^(-n/2)``.
for t in (0.25, 1.0, 4.0):
    v = field.order_variances(t)
    r = field.stirling_ratios(t)
    print(f"t={t:5.2f}  v_n={np.array2string(v, precision=3)}  ratio={np.array2string(r, precision=3)}")

# %%
# Pointwise second moment of the truncated field.
xs = np.linspace(0, np.pi, 7)
print(np.round(exact_second_moment(field, 1.0, xs), 4))
