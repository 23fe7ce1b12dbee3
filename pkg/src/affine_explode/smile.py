"""Implied-volatility asymptotics from explosion data.

* Lee's moment formula turns critical exponents into wing slopes,
  ``slope(x) = 2 - 4 (sqrt(x^2 + x) - x)``.
* For large maturities the log-price satisfies a large deviation principle
  with rate ``Lambda*``, the Legendre transform of the moment growth rate
  ``Lambda(p) = lim (1/T) log E exp(p theta . X_T)``, which yields the
  limiting smile ``sigma^2(x, inf)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, minimize_scalar

from .blowup import critical_exponents
from .equilibrium import eta, eta_derivative, fD_membership
from .errors import DomainError, NegativeExponent, NotInD, NotStable, OutsideEffectiveDomain
from .model import CanonicalModel
from .riccati import BlownUp, integrate_ricV

SMOOTH_SLOPE = 1e3
EDGE_PROBE = 1e-10


def lee_slope(x: float | ArrayLike) -> float | NDArray[np.float64]:
    """``2 - 4 (sqrt(x^2 + x) - x)`` for ``x >= 0`` with value 0 at ``inf``.

    Raises
    ------
    NegativeExponent
        If any argument is negative.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise NegativeExponent("critical exponents must be nonnegative")
    with np.errstate(divide="ignore"):
        # sqrt(x^2 + x) - x = 1 / (sqrt(1 + 1/x) + 1), stable for large x
        inv = np.where(arr > 0.0, 1.0 / np.where(arr > 0.0, arr, 1.0), np.inf)
        gap = np.where(arr > 0.0, 1.0 / (np.sqrt(1.0 + inv) + 1.0), 0.0)
    out = 2.0 - 4.0 * gap
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SmileAsymptotics:
    """Wing slopes of the implied variance at maturity ``T``."""

    right_slope: float
    left_slope: float
    T: float
    p_star: float
    q_star: float

    @property
    def never_explodes(self) -> bool:
        return not (np.isfinite(self.p_star) and np.isfinite(self.q_star))


def smile_at_T(model: CanonicalModel, theta: ArrayLike, T: float, X0: ArrayLike | None = None) -> SmileAsymptotics:
    """Lee wing slopes from the critical exponents at maturity ``T``.

    ``X0`` does not affect the slopes; it is accepted for symmetry with the
    other maturity-``T`` routines.
    """
    ce = critical_exponents(model, theta, T)
    return SmileAsymptotics(lee_slope(ce.p_star), lee_slope(ce.q_star), float(T), ce.p_star, ce.q_star)


# --------------------------------------------------------------------------
# long-term rate function


@dataclass(frozen=True, eq=False)
class RateFunction:
    """``Lambda`` on its effective domain ``(p_minus, p_plus)``.

    ``p_grid``/``values``/``slopes`` sample ``Lambda`` and ``Lambda'`` on a
    grid clustered toward both endpoints. ``edge_slopes`` are the slopes a
    relative ``1e-10`` inside each endpoint; ``essentially_smooth`` is set
    when both exceed ``1e3`` in magnitude.
    """

    model: CanonicalModel
    theta: NDArray[np.float64]
    p_minus: float
    p_plus: float
    p_grid: NDArray[np.float64]
    values: NDArray[np.float64]
    slopes: NDArray[np.float64]
    edge_points: tuple[float, float]
    edge_slopes: tuple[float, float]
    essentially_smooth: bool

    def __call__(self, p: float) -> float:
        return _Lambda(self.model, self.theta, p)

    def derivative(self, p: float) -> float:
        return _dLambda(self.model, self.theta, p)

    @property
    def x_star(self) -> float:
        """``Lambda'(0)``."""
        return self.derivative(0.0)

    @property
    def x_tilde_star(self) -> float:
        """``Lambda'(1)``."""
        return self.derivative(1.0)


def _Lambda(model: CanonicalModel, theta: np.ndarray, p: float) -> float:
    wD = p * theta[model.m :]
    return model.constant_rate(wD) + float(model.b_V @ eta(model, wD))


def _dLambda(model: CanonicalModel, theta: np.ndarray, p: float) -> float:
    tD = theta[model.m :]
    wD = p * tD
    lin = p * float(tD @ model.pi[0] @ tD) + float(model.b_D @ tD)
    return lin + float(model.b_V @ eta_derivative(model, wD, tD))


def _ray_inside(model: CanonicalModel, theta: np.ndarray) -> Callable[[float], bool]:
    m = model.m

    def inside(p: float) -> bool:
        u = p * theta
        if fD_membership(model, u[m:]).verdict != "interior":
            return False
        traj = integrate_ricV(model, u[:m], u[m:], record=False)
        return not isinstance(traj.status, BlownUp)

    return inside


def _ray_end(inside: Callable[[float], bool], start: float, step: float, tol: float, cap: float) -> float:
    lo, hi = start, start + step
    while inside(hi):
        lo = hi
        step *= 2.0
        if abs(step) > cap:
            return np.inf if step > 0 else -np.inf
        hi = start + step
    while abs(hi - lo) > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo


def rate_function(
    model: CanonicalModel,
    theta: ArrayLike,
    n_grid: int = 401,
    *,
    tol: float = 1e-13,
    cap: float = 2.0**30,
) -> RateFunction:
    """Sample ``Lambda`` along ``p theta`` between the two points where the
    ray leaves the interior of ``S_inf``.

    Raises
    ------
    NotStable
        If ``theta`` is not the stable equilibrium ``eta(theta_D)``.
    DomainError
        If the sampled ``Lambda`` fails the convexity check.
    """
    theta = np.asarray(theta, dtype=np.float64)
    m = model.m
    tV, tD = theta[:m], theta[m:]
    try:
        mem = fD_membership(model, tD)
        ok = mem.verdict == "interior" and np.allclose(eta(model, tD), tV, rtol=1e-9, atol=1e-9)
    except NotInD:
        ok = False
    if not ok:
        raise NotStable("theta is not an asymptotically stable equilibrium; the smile limit is not available")

    inside = _ray_inside(model, theta)
    p_plus = _ray_end(inside, 1.0, 1.0, tol, cap)
    p_minus = _ray_end(inside, 0.0, -1.0, tol, cap)
    if not (np.isfinite(p_plus) and np.isfinite(p_minus)):
        raise DomainError("the moment ray is unbounded; Lambda has no finite effective domain")

    k = np.arange(n_grid)
    frac = 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / n_grid))
    grid = p_minus + (p_plus - p_minus) * frac
    vals = np.array([_Lambda(model, theta, p) for p in grid])
    slopes = np.array([_dLambda(model, theta, p) for p in grid])
    if np.any(np.diff(slopes) < -1e-9 * (1.0 + np.abs(slopes[1:]))):
        raise DomainError("sampled Lambda is not convex")

    eps_lo = EDGE_PROBE * max(1.0, abs(p_minus))
    eps_hi = EDGE_PROBE * max(1.0, abs(p_plus))
    edges = (p_minus + eps_lo, p_plus - eps_hi)
    edge_slopes = (_dLambda(model, theta, edges[0]), _dLambda(model, theta, edges[1]))
    smooth = abs(edge_slopes[0]) > SMOOTH_SLOPE and abs(edge_slopes[1]) > SMOOTH_SLOPE
    return RateFunction(model, theta, p_minus, p_plus, grid, vals, slopes, edges, edge_slopes, smooth)


def legendre_argmax(rate: RateFunction, x: float) -> tuple[float, float]:
    """``(Lambda*(x), p)`` with ``p`` the maximizer of ``x p - Lambda(p)``.

    Raises
    ------
    OutsideEffectiveDomain
        If ``x`` lies outside the observed slope range.
    """
    lo_s, hi_s = rate.edge_slopes
    if not lo_s <= x <= hi_s:
        raise OutsideEffectiveDomain(f"x = {x:.6g} outside slope range [{lo_s:.6g}, {hi_s:.6g}]")
    nodes = np.concatenate([[rate.edge_points[0]], rate.p_grid, [rate.edge_points[1]]])
    vals = np.concatenate([[rate(rate.edge_points[0])], rate.values, [rate(rate.edge_points[1])]])
    obj = x * nodes - vals
    k = int(np.argmax(obj))
    a = nodes[max(k - 1, 0)]
    c = nodes[min(k + 1, nodes.size - 1)]

    def neg(p: float) -> float:
        return -(x * p - rate(p))

    b = nodes[k]
    if 0 < k < nodes.size - 1 and neg(b) < min(neg(a), neg(c)):
        res = minimize_scalar(neg, bracket=(a, b, c), method="golden", tol=1e-10)
        p = float(np.clip(res.x, a, c))
    else:
        res = minimize_scalar(neg, bounds=(a, c), method="bounded", options={"xatol": 1e-12})
        p = float(res.x)
    best = max((x * p - rate(p), p), (float(obj[k]), float(b)))
    return best


def legendre(rate: RateFunction, x: float) -> float:
    """``Lambda*(x) = sup_p {x p - Lambda(p)}``."""
    return legendre_argmax(rate, x)[0]


def solve_p0(rate: RateFunction, xtol: float = 1e-14) -> float:
    """The root ``p0`` of ``Lambda'``."""
    a, b = rate.edge_points
    return float(brentq(rate.derivative, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))


def sigma_infinity(rate: RateFunction, x: float) -> float:
    """Large-maturity implied variance ``sigma^2(x, inf)``.

    ``2 (2 L - x + 2 s sqrt(L^2 - x L))`` with ``L = Lambda*(x)`` and
    ``s = +1`` iff ``Lambda'(0) < x < Lambda'(1)``. At the two switch points
    the square root vanishes, so both branches agree there.
    """
    L = legendre(rate, x)
    sign = 1.0 if rate.x_star < x < rate.x_tilde_star else -1.0
    rad = max(L * L - x * L, 0.0)
    return 2.0 * (2.0 * L - x + 2.0 * sign * np.sqrt(rad))


def atm_expansion(rate: RateFunction) -> tuple[float, float]:
    """``(c0, c1)`` in ``sigma^2(x, inf) = c0 + c1 x + O(x^2)`` near ``x = 0``.

    With ``Lambda*(x) = Lambda*(0) + p0 x + O(x^2)`` the formula gives
    ``c0 = 8 Lambda*(0) = -8 Lambda(p0)`` and ``c1 = 4 (2 p0 - 1)``.
    """
    p0 = solve_p0(rate)
    return -8.0 * rate(p0), 4.0 * (2.0 * p0 - 1.0)
