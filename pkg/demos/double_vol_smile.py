"""
Long-term smile of a two-factor volatility model
================================================

For the double-volatility preset (kappa1=2, kappa2=1, rho=-0.2) this
computes the long-term rate function Lambda of log S_T / T, its Legendre
transform and the limiting implied variance sigma^2(x, inf). The boundary
of S_inf at a fixed w is traced twice, by ray bisection and by shooting
along the unstable manifold of the type-1 equilibrium.

Run with ``python demos/double_vol_smile.py``.
"""
import numpy as np

from affine_explode import (
    atm_expansion,
    double_vol,
    enumerate_equilibria,
    eta,
    legendre,
    manifold_shoot,
    rate_function,
    sigma_infinity,
    solve_p0,
    trace_Sinf_boundary,
)

pre = double_vol()
model, theta = pre.model, pre.equity.theta

# %% Rate function on its effective domain
r = rate_function(model, theta)
print(f"effective domain ({r.p_minus:.4f}, {r.p_plus:.4f}), essentially smooth: {r.essentially_smooth}")
for p in np.linspace(r.p_minus, r.p_plus, 7)[1:-1]:
    print(f"Lambda({p:+.4f}) = {r(p):+.6f}")

# %% At the money: the minimizer p0 of Lambda gives sigma^2(0, inf) = -8 Lambda(p0)
p0 = solve_p0(r)
c0, c1 = atm_expansion(r)
print(f"p0 = {p0:.6f}, sigma^2(0,inf) = {c0:.6f} = -8 Lambda(p0) = {-8 * r(p0):.6f}, slope {c1:.6f}")
assert abs(legendre(r, 0.0) + r(p0)) < 1e-12

# %% The limiting smile
for x in np.linspace(-0.3, 0.3, 7):
    print(f"x = {x:+.2f}  sigma^2 = {sigma_infinity(r, x):.6f}")

# %% Boundary of S_inf at w = 0.5: manifold shooting against ray bisection
w = [0.5]
nu = next(e.nu for e in enumerate_equilibria(model, w) if e.kind.label == "unstable")
arc = manifold_shoot(model, w, nu, radius=1.0, n_points=21)
sec = trace_Sinf_boundary(model, w, rays=arc - eta(model, w), tol=1e-9)
pts = sec.base_point + sec.radii[:, None] * sec.rays
print(f"unstable equilibrium nu = {nu}")
print(f"max gap between {len(arc)} manifold points and bisected boundary: {np.max(np.linalg.norm(pts - arc, axis=1)):.2e}")
