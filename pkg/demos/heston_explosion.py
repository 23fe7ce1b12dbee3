"""
Moment explosion in the Heston model
====================================

Walks through the explosion picture for the Heston preset
(kappa=1, sigma=0.4, rho=-0.2): equilibria of the Riccati field,
the long-term region S_inf, blow-up times, critical moments and
the resulting Lee wing slopes.

Run with ``python demos/heston_explosion.py``.
"""
import numpy as np

from affine_explode import (
    blow_up_time,
    critical_exponents,
    enumerate_equilibria,
    heston,
    lee_slope,
    smile_at_T,
    trace_Sinf_boundary,
    transform_value,
)

pre = heston()
model, theta, X0 = pre.model, pre.equity.theta, pre.equity.X0

# %% Equilibria of the variance equation at a fixed w
# Two roots L < U: the lower is stable, the upper repels.
for e in enumerate_equilibria(model, [1.0]):
    print(f"nu = {e.nu[0]:+.4f}  kind = {e.kind.label}")

# %% Long-term region: along +e1 the section ends at U(w), along -e1 it never ends
sec = trace_Sinf_boundary(model, [0.5], rays=2, tol=1e-10)
for d, r, f in zip(sec.rays, sec.radii, sec.flags):
    print(f"ray {d}: radius {r:.6f}  ({f})")

# %% Blow-up times grow without bound as v approaches U(w) from above
for v in (2.5, 3.0, 5.0, 20.0):
    print(f"T*(v={v:5.1f}, w=1) = {blow_up_time(model, [v, 1.0]).t_star:.6f}")

# %% Critical moments shrink with maturity
print(" T      p*        q*      right slope  left slope")
for T in (0.5, 1.0, 2.0, 4.0):
    ce = critical_exponents(model, theta, T)
    print(f"{T:4.1f}  {ce.p_star:8.4f}  {ce.q_star:8.4f}  {lee_slope(ce.p_star):10.5f}  {lee_slope(ce.q_star):10.5f}")

# %% Moments just inside the critical exponent are finite, just beyond they explode
ce = critical_exponents(model, theta, 1.0)
for s in (0.9, 0.99):
    tv = transform_value(model, s * (ce.p_star + 1.0) * theta, X0, 1.0)
    print(f"E[S_1^{s * (ce.p_star + 1.0):.4f}] = {tv.moment:.6g}")

sm = smile_at_T(model, theta, 1.0, X0)
print(f"T=1 wing slopes: right {sm.right_slope:.5f}, left {sm.left_slope:.5f}")
