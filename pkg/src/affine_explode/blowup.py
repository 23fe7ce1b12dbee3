"""Blow-up times, finite-horizon regions ``S_T`` and critical exponents.

Blow-up times come from the compactification ``x = 2y / (1 + sqrt(1 + 4|y|^2))``
which maps blow-up of ``y`` to convergence of ``x`` to the unit sphere. In
the rescaled time ``s`` with ``dt/ds = 1 - R^4`` the system becomes

    x' = (1 + R^2) f~ - 2 (x . f~) x,
    f~_i = 1/2 x_i^2 1{i in I} + (1 - R^2)(A_V x)_i + (1 - R^2)^2 g_i(w),

and ``T* = int_0^inf (1 - R^4) ds``. The state carries ``l = log(1 - R^2)``
so the distance to the sphere is resolved to full relative precision.

The fixed-horizon system ``x(s) = e^-s y(T (1 - e^-s))`` has equilibria with
entries ``0`` or ``2/T`` and decides membership in ``S_T``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels as K
from ._rays import RAY_CAP, bisect_ray, parallel_map, ray_directions
from .equilibrium import Kind, kind_from_diagonal
from .errors import (
    DomainError,
    NotOnBoundary,
    StepSizeUnderflow,
    TailNotContracting,
)
from .longterm import BoundarySection, RegionVerdict
from .model import CanonicalModel
from .riccati import ATOL, CONV_TOL, DWELL, RTOL, escape_threshold

TAIL_EPS = 1e-10
S_MAX = 1e6
WARMUP_RADIUS = 1e3
BOUNDARY_BAND = 1e-6
COMPONENT_TOL = 1e-4


# --------------------------------------------------------------------------
# compactification


def _one_minus_r2(y: np.ndarray) -> float:
    s = float(np.max(np.abs(y))) if y.size else 0.0
    # scaled norm so |y| near the float limit does not overflow
    r = s * float(np.linalg.norm(y / s)) if 0.0 < s < np.inf else s
    return 2.0 / (1.0 + np.sqrt(1.0 + 4.0 * r * r)) if r < 1e150 else 1.0 / r


def compactify(y: ArrayLike) -> NDArray[np.float64]:
    """Map ``y`` into the open unit ball."""
    y = np.asarray(y, dtype=np.float64)
    return y * _one_minus_r2(y)


def decompactify(x: ArrayLike) -> NDArray[np.float64]:
    """Inverse map ``y = x / (1 - |x|^2)``; requires ``|x| < 1``."""
    x = np.asarray(x, dtype=np.float64)
    r2 = float(x @ x)
    if not r2 < 1.0:
        raise ValueError(f"|x| = {np.sqrt(r2):.17g} is not inside the unit ball")
    return x / (1.0 - r2)


# --------------------------------------------------------------------------
# blow-up time


@dataclass(frozen=True, eq=False)
class ExplosionReport:
    """Blow-up time of ``u`` and the coordinates that explode.

    ``t_star`` is ``inf`` when the solution exists for all time; ``limit``
    then holds the equilibrium the compactified run settled at.
    ``quadrature_tail`` is the analytic estimate added for the part of the
    integral beyond the truncation point.
    """

    t_star: float
    components: tuple[int, ...]
    quadrature_tail: float = 0.0
    limit: NDArray[np.float64] | None = None
    indeterminate: bool = False
    warmup_time: float = 0.0
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.t_star))


def _compact_args(model: CanonicalModel, w: np.ndarray) -> dict:
    return dict(A=model.A_V, imask=model.imask, g=model.g(w))


def _warmup(model: CanonicalModel, v: np.ndarray, w: np.ndarray, rtol: float, atol: float):
    """Integrate the Riccati system directly until ``|y|`` drops to the
    warm-up radius or the solution grows tenfold."""
    esc = max(escape_threshold(model, w), 10.0 * float(np.max(v)))
    res = K.run(
        K.RICCATI,
        np.concatenate([v, [0.0]]),
        t_end=1e4,
        rtol=rtol,
        atol=atol,
        esc=esc,
        r_stop=WARMUP_RADIUS,
        **_compact_args(model, w),
    )
    if res.status in (K.UNDERFLOW, K.NONFINITE, K.MAX_STEPS):
        raise StepSizeUnderflow(f"warm-up stopped at t={res.t:.6g} ({res.status_name})")
    return res.t, res.z[: model.m].copy()


def blow_up_time(
    model: CanonicalModel,
    u: ArrayLike,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    tail_eps: float = TAIL_EPS,
    s_max: float = S_MAX,
) -> ExplosionReport:
    """Blow-up time ``T*(u)`` from the compactified system.

    Starting points with ``|v| > 1e3`` are first advanced with the Riccati
    system itself until ``|y| <= 1e3`` (or tenfold growth), because the
    compactified flow can crawl when it starts next to the sphere.

    Raises
    ------
    TailNotContracting
        If the run reaches the sphere with ``x . f~ <= 0``.
    """
    v, w = model.split(u)
    w = model.check_kernel(w)
    t0 = 0.0
    if float(np.linalg.norm(v)) > WARMUP_RADIUS:
        t0, v = _warmup(model, v, w, rtol, atol)

    x0 = compactify(v)
    ell0 = np.log(_one_minus_r2(v))
    args = _compact_args(model, w)
    res = K.run(
        K.COMPACT,
        np.concatenate([x0, [ell0, 0.0]]),
        t_end=s_max,
        rtol=rtol,
        atol=atol,
        h_max=10.0,
        conv_tol=CONV_TOL,
        dwell=DWELL,
        tail_eps=tail_eps,
        **args,
    )
    m = model.m
    stats = {"s_end": res.t, "n_accepted": res.n_accepted, "n_rejected": res.n_rejected}
    x = res.z[:m]
    if res.status == K.TAIL_REACHED:
        d = K.evaluate_rhs(K.COMPACT, res.z, **args)
        xf = -0.5 * d[m]
        if not xf > 0.0:
            raise TailNotContracting(f"x . f~ = {xf:.3g} at the sphere")
        e_end = float(np.exp(res.z[m]))
        tail = e_end / xf
        R = float(np.linalg.norm(x))
        comps = tuple(i for i in range(m) if model.imask[i] and x[i] / R > COMPONENT_TOL)
        return ExplosionReport(t0 + float(res.z[m + 1]) + tail, comps, tail, None, False, t0, stats)
    if res.status == K.CONVERGED:
        return ExplosionReport(np.inf, (), 0.0, decompactify(x), False, t0, stats)
    if res.status == K.END:
        return ExplosionReport(np.inf, (), 0.0, None, True, t0, stats)
    raise StepSizeUnderflow(f"compactified run stopped at s={res.t:.6g} ({res.status_name})")


def compact_trajectory(
    model: CanonicalModel,
    u: ArrayLike,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    tail_eps: float = TAIL_EPS,
    s_max: float = S_MAX,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Recorded compactified run: returns ``(t, x, y)`` sampled at the
    accepted steps, with ``t`` the accumulated original time."""
    v, w = model.split(u)
    w = model.check_kernel(w)
    res = K.run(
        K.COMPACT,
        np.concatenate([compactify(v), [np.log(_one_minus_r2(v)), 0.0]]),
        t_end=s_max,
        rtol=rtol,
        atol=atol,
        h_max=10.0,
        conv_tol=CONV_TOL,
        tail_eps=tail_eps,
        record=True,
        **_compact_args(model, w),
    )
    m = model.m
    x = res.zs[:, :m]
    y = x / np.exp(res.zs[:, m])[:, None]
    return res.zs[:, m + 1].copy(), x.copy(), y


# --------------------------------------------------------------------------
# fixed-horizon system


def quad_rhs(model: CanonicalModel, x: ArrayLike, w: ArrayLike, T: float) -> NDArray[np.float64]:
    """Right-hand side of the fixed-horizon system, length ``m + 1``."""
    w = model.check_kernel(w)
    x = np.asarray(x, dtype=np.float64).reshape(model.m + 1)
    return K.evaluate_rhs(K.QUAD, x, model.A_V, model.imask, model.g(w), T=T)


def quad_jacobian(model: CanonicalModel, x: ArrayLike, w: ArrayLike, T: float) -> NDArray[np.float64]:
    w = model.check_kernel(w)
    x = np.asarray(x, dtype=np.float64).reshape(model.m + 1)
    m = model.m
    xv, xm = x[:m], x[m]
    g = model.g(w)
    J = np.zeros((m + 1, m + 1))
    J[:m, :m] = T * xm * np.asarray(model.A_V) + np.diag(T * model.imask * xv - 1.0)
    J[:m, m] = T * (model.A_V @ xv) + 2.0 * T * xm * g
    J[m, m] = -1.0
    return J


@dataclass(frozen=True, eq=False)
class QuadEquilibrium:
    x: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    kind: Kind


def quad_equilibria(model: CanonicalModel, T: float, w: ArrayLike | None = None) -> list[QuadEquilibrium]:
    """All ``2^|I|`` equilibria: ``2/T`` or ``0`` on the index set, ``0``
    elsewhere, last coordinate ``0``. The origin comes first."""
    w = np.zeros(model.n) if w is None else model.check_kernel(w)
    m = model.m
    idx = model.index_set
    out = []
    for bits in itertools.product((0, 1), repeat=len(idx)):
        x = np.zeros(m + 1)
        for i, b in zip(idx, bits):
            if b:
                x[i] = 2.0 / T
        J = quad_jacobian(model, x, w, T)
        ev = np.linalg.eigvals(J)
        out.append(QuadEquilibrium(x, ev, kind_from_diagonal(np.diag(J))))
    return out


def _quad_diagnostic(model: CanonicalModel, v: np.ndarray, w: np.ndarray, T: float) -> dict:
    res = K.run(
        K.QUAD,
        np.concatenate([v, [1.0]]),
        t_end=200.0,
        T=T,
        conv_tol=CONV_TOL,
        esc=max(1e6, 10.0 * float(np.max(np.abs(v)))),
        **_compact_args(model, w),
    )
    return {"quad_status": res.status_name, "quad_end": res.z.copy(), "quad_s": res.t}


def in_S_T(model: CanonicalModel, u: ArrayLike, T: float, *, diagnostics: bool = True) -> RegionVerdict:
    """Classify ``u`` relative to ``S_T``.

    Decided by the blow-up time: interior iff ``T* > T``, boundary iff
    ``|T* - T| <= 1e-6 T`` (certificate: the fixed-horizon equilibrium with
    ``2/T`` on the exploding coordinates), outside otherwise. The run of the
    fixed-horizon system from ``(v, 1)`` is attached as a diagnostic.
    """
    v, w = model.split(u)
    w = model.check_kernel(w)
    rep = blow_up_time(model, u)
    details: dict[str, Any] = {"t_star": rep.t_star}
    if diagnostics:
        details.update(_quad_diagnostic(model, v, w, T))
    band = BOUNDARY_BAND * T
    if rep.indeterminate:
        return RegionVerdict("indeterminate", rep.t_star, band, details)
    if rep.t_star > T + band:
        return RegionVerdict("interior", np.zeros(model.m), band, details)
    if abs(rep.t_star - T) <= band:
        nu = np.zeros(model.m)
        nu[list(rep.components)] = 2.0 / T
        details["components"] = rep.components
        return RegionVerdict("boundary", nu, band, details)
    return RegionVerdict("outside", rep.t_star, band, details)


# --------------------------------------------------------------------------
# critical exponents and rates


class CriticalExponents(NamedTuple):
    p_star: float
    q_star: float


def _critical(t_star_of, T: float, tol: float, cap: float) -> float:
    lo, hi = 0.0, 1.0
    while t_star_of(hi) > T:
        lo = hi
        if hi >= cap:
            return np.inf
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if t_star_of(mid) > T:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_exponents(
    model: CanonicalModel,
    theta: ArrayLike,
    T: float,
    *,
    tol: float = 1e-10,
    cap: float = RAY_CAP,
) -> CriticalExponents:
    """``p* = sup{p : T*((p + 1) theta) > T}`` and
    ``q* = sup{q : T*(-q theta) > T}``.

    Both are found by doubling from a safe lower bracket (``p = 0`` is the
    martingale exponent, ``q = 0`` the zero exponent) and bisection, using
    that ``T*`` is nonincreasing along rays. An exponent that never
    explodes up to ``cap`` is returned as ``inf``.
    """
    theta = np.asarray(theta, dtype=np.float64)

    def tp(p: float) -> float:
        return blow_up_time(model, (p + 1.0) * theta).t_star

    def tq(q: float) -> float:
        return blow_up_time(model, -q * theta).t_star

    return CriticalExponents(_critical(tp, T, tol, cap), _critical(tq, T, tol, cap))


def blowup_rate(
    model: CanonicalModel,
    u: ArrayLike,
    X0: ArrayLike,
    T: float,
    verdict: RegionVerdict | None = None,
) -> float:
    """``lim_{S -> T} (T - S) log E exp(u . X_S) = T nu . X0_V`` for ``u`` on
    the boundary of ``S_T``.

    Raises
    ------
    NotOnBoundary
        If ``u`` is not classified as a boundary point of ``S_T``.
    """
    if verdict is None:
        verdict = in_S_T(model, u, T, diagnostics=False)
    if verdict.region != "boundary":
        raise NotOnBoundary(f"u is {verdict.region} relative to S_T")
    X0 = np.asarray(X0, dtype=np.float64)
    return float(T * np.asarray(verdict.certificate) @ X0[: model.m])


def trace_ST_boundary(
    model: CanonicalModel,
    w: ArrayLike,
    T: float,
    rays: int | Sequence[ArrayLike] = 64,
    tol: float = 1e-6,
    *,
    cap: float = RAY_CAP,
    workers: int | None = None,
) -> BoundarySection:
    """Boundary of the section ``S_T(w)`` along rays from ``v = 0``,
    bisecting on ``T*(v, w) > T``."""
    w = model.check_kernel(w)
    base = np.zeros(model.m)
    if not blow_up_time(model, np.concatenate([base, w])).t_star > T:
        raise DomainError("the base point (0, w) is not inside S_T")
    dirs = ray_directions(model.m, rays) if isinstance(rays, (int, np.integer)) else np.atleast_2d(
        np.asarray(rays, dtype=np.float64)
    )
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    def one(d: np.ndarray) -> tuple[float, str]:
        def inside(r: float) -> bool:
            return blow_up_time(model, np.concatenate([base + r * d, w])).t_star > T

        return bisect_ray(inside, tol=tol, cap=cap)

    out = parallel_map(one, list(dirs), workers)
    return BoundarySection(w, dirs, np.array([r for r, _ in out]), base, tuple(f for _, f in out))
