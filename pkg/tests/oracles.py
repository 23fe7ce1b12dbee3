"""Closed forms used as independent references.

Everything here is derived by hand from the model equations and uses only
numpy/scipy, so it shares no code with the package.

Scalar Riccati ``z' = z^2/2 - k z + g`` with ``D = k^2 - 2g > 0`` has
equilibria ``L, U = k -+ sqrt(D)``. Partial fractions give
``dz / ((z - L)(z - U)) = dt / 2`` and hence, for ``z(0) = v > U``,

    T*(v) = ln((v - L) / (v - U)) / sqrt(D).

Heston in original coordinates ``Y = (V, log S)`` with exponent ``(a, w)``:
the volatility coefficient ``psi`` solves
``psi' = sigma^2 psi^2 / 2 - (kappa - rho sigma w) psi + (w^2 - w) / 2``.
With ``z = sigma^2 psi`` this is the scalar equation with
``k = kappa - rho sigma w`` and ``g = sigma^2 (w^2 - w) / 2``. The canonical
exponent ``(v, w)`` for ``X = (V / sigma^2, log S - rho V / sigma)`` has
``z = v - rho sigma w``.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq


def scalar_blowup_time(k: float, g: float, v: float) -> float:
    """Blow-up time of ``z' = z^2/2 - k z + g`` from ``z(0) = v``."""
    D = k * k - 2.0 * g
    if D > 0:
        r = np.sqrt(D)
        L, U = k - r, k + r
        return np.inf if v <= U else float(np.log((v - L) / (v - U)) / r)
    if D == 0:
        return np.inf if v <= k else 2.0 / (v - k)
    c = np.sqrt(-D)
    # z = k + c tan(c t / 2 + arctan((v - k) / c)) reaches infinity at angle pi/2
    return float((np.pi - 2.0 * np.arctan((v - k) / c)) / c)


class HestonOracle:
    """Closed forms for the Heston model at parameters ``(kappa, sigma, rho)``."""

    def __init__(self, kappa: float = 1.0, sigma: float = 0.4, rho: float = -0.2,
                 phi: float = 0.09, V0: float = 0.09) -> None:
        self.kappa, self.sigma, self.rho, self.phi, self.V0 = kappa, sigma, rho, phi, V0

    def k_eff(self, w: float) -> float:
        return self.kappa - self.rho * self.sigma * w

    def g_eff(self, w: float) -> float:
        return 0.5 * self.sigma**2 * (w * w - w)

    def disc(self, w: float) -> float:
        return self.k_eff(w) ** 2 - 2.0 * self.g_eff(w)

    def shift(self, w: float) -> float:
        # canonical v = z + rho sigma w
        return self.rho * self.sigma * w

    def L(self, w: float) -> float:
        return self.k_eff(w) - np.sqrt(self.disc(w)) + self.shift(w)

    def U(self, w: float) -> float:
        return self.k_eff(w) + np.sqrt(self.disc(w)) + self.shift(w)

    def boundary_radius(self, w: float) -> float:
        """``U(w) - eta(w)``."""
        return 2.0 * np.sqrt(self.disc(w))

    def t_star(self, v: float, w: float) -> float:
        """Blow-up time of the canonical exponent ``(v, w)``."""
        return scalar_blowup_time(self.k_eff(w), self.g_eff(w), v - self.shift(w))

    def critical_exponents(self, T: float) -> tuple[float, float]:
        """``(p*, q*)`` from ``T*((p + 1) theta) = T`` and ``T*(-q theta) = T``.

        ``theta`` is ``(0, 1)`` in original coordinates, so ``a = 0``, ``z0 = 0``.
        """

        def gap(w: float) -> float:
            return scalar_blowup_time(self.k_eff(w), self.g_eff(w), 0.0) - T

        hi = 2.0
        while gap(hi) > 0:
            hi *= 2.0
        lo = -1.0
        while gap(lo) > 0:
            lo *= 2.0
        w_plus = brentq(gap, 1.0 + 1e-12, hi, xtol=1e-14, rtol=1e-15)
        w_minus = brentq(gap, lo, -1e-12, xtol=1e-14, rtol=1e-15)
        return w_plus - 1.0, -w_minus

    def domain(self) -> tuple[float, float]:
        """Interval of ``w`` with ``disc(w) >= 0``: roots of a quadratic in ``w``."""
        s, r, k = self.sigma, self.rho, self.kappa
        # (k - r s w)^2 - s^2 (w^2 - w) = s^2 (r^2 - 1) w^2 + (s^2 - 2 k r s) w + k^2
        a2, a1, a0 = s * s * (r * r - 1.0), s * s - 2.0 * k * r * s, k * k
        roots = np.sort(np.roots([a2, a1, a0]).real)
        return float(roots[0]), float(roots[1])

    def Lambda(self, p: float) -> float:
        """Stock growth rate ``-(kappa phi rho / sigma) p + (kappa phi / sigma^2) L(p)``."""
        k, phi, s, r = self.kappa, self.phi, self.sigma, self.rho
        return -(k * phi * r / s) * p + (k * phi / s**2) * self.L(p)


def double_vol_p0(kappa1: float, rho: float) -> float:
    """Root of ``Lambda'`` for the double volatility model.

    ``Lambda'(p) = 0`` iff ``g1'(p) = rho sqrt(kappa1^2 - 2 g1(p))`` with
    ``g1(p) = (1 - rho^2) p^2 / 2 + (rho kappa1 - 1/2) p``. Squaring gives
    ``(1 - rho^2) p^2 + 2 c p + c^2 - rho^2 kappa1^2 = 0`` with
    ``c = rho kappa1 - 1/2``, whose roots satisfy
    ``g1'(p) = +- |rho| q / 2``, ``q = sqrt(1 + 4 kappa1^2 - 4 rho kappa1)``.
    The root where ``g1'`` has the sign of ``rho`` is

        p0 = (1 - 2 rho kappa1 + rho q) / (2 (1 - rho^2)).
    """
    q = np.sqrt(1.0 + 4.0 * kappa1**2 - 4.0 * rho * kappa1)
    return (1.0 - 2.0 * rho * kappa1 + rho * q) / (2.0 * (1.0 - rho * rho))


def lee_slope_direct(x: float) -> float:
    return 2.0 - 4.0 * (np.sqrt(x * x + x) - x)


def compactify_direct(y: np.ndarray) -> np.ndarray:
    return 2.0 * y / (1.0 + np.sqrt(1.0 + 4.0 * float(y @ y)))
