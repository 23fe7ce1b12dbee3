"""Riccati system for the volatility exponent and the transform formula.

With ``u = (v, w)`` and ``w`` in ``Ker A_D`` the dependent exponent stays at
``w`` and the volatility exponent solves

    y' = f(y, w),  f_i = 1/2 y_i^2 1{i in I} + (A_V y)_i + g_i(w),  y(0) = v,

while ``log E exp(u . X_T) = I(T) + y(T) . X0_V + w . X0_D`` with
``I' = 1/2 w^T pi_0 w + b_D . w + b_V . y``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _kernels as K
from .errors import ExplodesBeforeT, StepSizeUnderflow
from .model import CanonicalModel

RTOL = 1e-10
ATOL = 1e-12
CONV_TOL = 1e-9
DWELL = 10
HORIZON_CAP = 1e4


def rhs_f(model: CanonicalModel, y: ArrayLike, w: ArrayLike) -> NDArray[np.float64]:
    """Evaluate ``f(y, w)``."""
    y = np.asarray(y, dtype=np.float64)
    return 0.5 * model.imask * y * y + model.A_V @ y + model.g(w)


def jacobian(model: CanonicalModel, y: ArrayLike) -> NDArray[np.float64]:
    """``Df(y) = A_V + diag_I(y)``, lower triangular."""
    y = np.asarray(y, dtype=np.float64)
    return np.asarray(model.A_V) + np.diag(model.imask * y)


def escape_threshold(model: CanonicalModel, w: ArrayLike) -> float:
    """``max(1e6, 10 (|A_V| + |g(w)|))``."""
    return max(1e6, 10.0 * (float(np.linalg.norm(model.A_V, 2)) + float(np.linalg.norm(model.g(w)))))


# --------------------------------------------------------------------------
# trajectory status


@dataclass(frozen=True)
class Converged:
    limit: NDArray[np.float64]
    name: str = field(default="converged", init=False)


@dataclass(frozen=True)
class BlownUp:
    t_star: float
    components: tuple[int, ...]
    name: str = field(default="blown_up", init=False)


@dataclass(frozen=True)
class HorizonReached:
    t_end: float
    indeterminate: bool = False
    name: str = field(default="horizon", init=False)


Status = Union[Converged, BlownUp, HorizonReached]


@dataclass(frozen=True)
class StepStats:
    n_accepted: int
    n_rejected: int
    h_min: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of the Riccati system.

    ``t`` and ``y`` hold the accepted steps (empty when recording is off
    apart from the terminal point).
    """

    t: NDArray[np.float64]
    y: NDArray[np.float64]
    w: NDArray[np.float64]
    status: Status
    stats: StepStats

    @property
    def y_end(self) -> NDArray[np.float64]:
        return self.y[-1]

    def to_csv(self) -> str:
        m = self.y.shape[1]
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t"] + [f"y{i + 1}" for i in range(m)] + ["status"])
        for t, row in zip(self.t, self.y):
            wr.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row] + [self.status.name])
        return buf.getvalue()


def _kernel_args(model: CanonicalModel, w: np.ndarray) -> dict:
    return dict(A=model.A_V, imask=model.imask, g=model.g(w))


def integrate_ricV(
    model: CanonicalModel,
    v: ArrayLike,
    w: ArrayLike,
    horizon: float = np.inf,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    detect: bool = True,
    record: bool = True,
    horizon_cap: float = HORIZON_CAP,
    refine_blowup: bool = True,
) -> Trajectory:
    """Integrate the Riccati system from ``y(0) = v``.

    With ``detect=True`` the run stops as soon as the trajectory settles at
    an equilibrium (``|f| < 1e-9`` and step change ``< 1e-9`` over 10
    accepted steps) or escapes (``y_i > Y_esc`` with ``y_i' > 0`` for some
    quadratic index). An escape is refined to the exact blow-up time with
    the compactified system.

    Raises
    ------
    StepSizeUnderflow
        If the step size collapses without either detector firing.
    """
    w = model.check_kernel(w)
    v = np.asarray(v, dtype=np.float64).reshape(model.m)
    capped = not np.isfinite(horizon)
    t_end = min(horizon, horizon_cap) if capped else float(horizon)
    esc = escape_threshold(model, w) if detect else np.inf
    res = K.run(
        K.RICCATI,
        np.concatenate([v, [0.0]]),
        t_end=t_end,
        rtol=rtol,
        atol=atol,
        conv_tol=CONV_TOL if detect else 0.0,
        dwell=DWELL,
        esc=esc,
        record=record,
        **_kernel_args(model, w),
    )
    stats = StepStats(res.n_accepted, res.n_rejected, res.h_min)
    if record:
        ts, ys = res.ts, res.zs[:, : model.m]
    else:
        ts, ys = np.array([res.t]), res.z[None, : model.m]

    if res.status == K.CONVERGED:
        status: Status = Converged(res.z[: model.m].copy())
    elif res.status == K.BLOWN_UP:
        t_star, comps = res.t, tuple(i for i in range(model.m) if model.imask[i] and res.z[i] > esc)
        if refine_blowup:
            from .blowup import blow_up_time

            rep = blow_up_time(model, np.concatenate([res.z[: model.m], w]))
            t_star = res.t + rep.t_star
            comps = rep.components or comps
        status = BlownUp(float(t_star), comps)
    elif res.status == K.END:
        status = HorizonReached(res.t, indeterminate=capped and detect)
    else:
        raise StepSizeUnderflow(
            f"integration stopped at t={res.t:.6g} ({res.status_name}), "
            f"min step {res.h_min:.3g}"
        )
    return Trajectory(ts, ys, w, status, stats)


@dataclass(frozen=True)
class TransformValue:
    """``log E exp(u . X_T)`` with its parts ``I(T)`` and ``y(T)``."""

    log_moment: float
    I: float
    y_T: NDArray[np.float64]
    w: NDArray[np.float64]
    T: float

    @property
    def moment(self) -> float:
        return float(np.exp(self.log_moment))


def riccati_solution(
    model: CanonicalModel,
    u: ArrayLike,
    T: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> tuple[float, NDArray[np.float64]]:
    """``(I(T), y(T))`` without any explosion check."""
    v, w = model.split(u)
    w = model.check_kernel(w)
    if T == 0.0:
        return 0.0, v
    res = K.run(
        K.RICCATI,
        np.concatenate([v, [0.0]]),
        t_end=float(T),
        bV=model.b_V,
        c0=model.constant_rate(w),
        rtol=rtol,
        atol=atol,
        **_kernel_args(model, w),
    )
    if res.status != K.END:
        raise StepSizeUnderflow(f"integration stopped at t={res.t:.6g} ({res.status_name})")
    return float(res.z[model.m]), res.z[: model.m].copy()


def transform_value(
    model: CanonicalModel,
    u: ArrayLike,
    X0: ArrayLike,
    T: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    check: bool = True,
) -> TransformValue:
    """Log exponential moment ``log E exp(u . X_T)`` via the transform
    formula.

    Raises
    ------
    ExplodesBeforeT
        If the blow-up time of ``u`` does not exceed ``T``.
    """
    u = np.asarray(u, dtype=np.float64)
    X0 = np.asarray(X0, dtype=np.float64)
    v, w = model.split(u)
    if check:
        from .blowup import blow_up_time

        rep = blow_up_time(model, u)
        if not rep.t_star > T:
            raise ExplodesBeforeT(f"T* = {rep.t_star:.10g} <= T = {T:.10g}")
    I, yT = riccati_solution(model, u, T, rtol=rtol, atol=atol)
    m = model.m
    lm = I + float(yT @ X0[:m]) + float(w @ X0[m:])
    return TransformValue(lm, I, yT, w, float(T))
