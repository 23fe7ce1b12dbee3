"""
Long-term growth in a cascading volatility chain
================================================

In the cascading preset each variance factor drives the mean of the next.
This demo checks interior growth rates against the transform at a long
horizon and shows the boundary growth rate 2 phi (kappa delta^(m-1)/sigma)^2
being attained on the boundary of S_inf.

Run with ``python demos/cascading_growth.py``.
"""
import numpy as np

from affine_explode import cascading, eta, growth_rate, in_S_infinity, transform_value

pre = cascading()
model = pre.model
T = 200.0

# %% Interior exponents near the stable equilibrium eta(w), with a log-price factor attached
# (1/T) log E[exp(u.X_T)] settles on the equilibrium rate, up to an O(1/T) transient
eq = cascading(equity=True)
w = np.array([0.5])
for dv in ([0.05, 0.05, 0.05], [-0.2, 0.1, 0.0], [0.0, 0.0, 0.05]):
    u = np.concatenate([eta(eq.model, w) + dv, w])
    verdict = in_S_infinity(eq.model, u)
    rate = growth_rate(eq.model, u, verdict)
    empirical = transform_value(eq.model, u, eq.equity.X0, T).log_moment / T
    print(f"u = {np.round(u, 4)}: {verdict.region:8s} rate {rate:.6f}  log E / T = {empirical:.6f}")

# %% On the boundary the rate is set by the saddle nu = (0, ..., 0, 2 kappa delta^(m-1))
kappa, delta, sigma, phi, m = 1.0, 0.5, 0.4, 0.09, 3
ub = np.zeros(model.d)
ub[m - 1] = 2.0 * kappa * delta ** (m - 1)
verdict = in_S_infinity(model, ub)
closed = 2.0 * phi * (kappa * delta ** (m - 1) / sigma) ** 2
print(f"u = {ub}: {verdict.region}, rate {growth_rate(model, ub, verdict):.7f}")
print(f"closed form 2 phi (kappa delta^(m-1)/sigma)^2 = {closed:.7f}")
