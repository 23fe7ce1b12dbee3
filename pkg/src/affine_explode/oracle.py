"""Independent checks: closed-form scalar Riccati solutions, Monte Carlo
exponential moments and a stable-manifold tracer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from . import _kernels as K
from .blowup import blow_up_time
from .equilibrium import classify
from .errors import ExplodesBeforeT, NotType1, Underresolved
from .model import CanonicalModel
from .riccati import jacobian, rhs_f


# --------------------------------------------------------------------------
# scalar Riccati  y' = 1/2 y^2 - kappa y + g


@dataclass(frozen=True)
class ScalarRiccatiSolution:
    """Closed form of ``y' = 1/2 y^2 - kappa y + g`` with
    ``Delta = kappa^2 - 2 g``.

    ``L`` and ``U`` are ``kappa -+ sqrt(Delta)`` (equal for ``Delta = 0``,
    ``None`` for ``Delta < 0``).
    """

    kappa: float
    g: float

    @property
    def disc(self) -> float:
        return self.kappa**2 - 2.0 * self.g

    @property
    def L(self) -> float | None:
        D = self.disc
        return None if D < 0 else self.kappa - np.sqrt(D)

    @property
    def U(self) -> float | None:
        D = self.disc
        return None if D < 0 else self.kappa + np.sqrt(D)

    def t_star(self, v: float) -> float:
        """Blow-up time from ``y(0) = v`` (``inf`` if none)."""
        D, k = self.disc, self.kappa
        if D > 0:
            r = np.sqrt(D)
            L, U = k - r, k + r
            if v <= U:
                return np.inf
            return float(np.log((v - L) / (v - U)) / r)
        if D == 0:
            return np.inf if v <= k else 2.0 / (v - k)
        c = np.sqrt(-D)
        return float(2.0 / c * (0.5 * np.pi - np.arctan((v - k) / c)))

    def y(self, t: float | ArrayLike, v: float) -> float | NDArray[np.float64]:
        """Solution at time ``t`` (``t`` below the blow-up time)."""
        t = np.asarray(t, dtype=np.float64)
        D, k = self.disc, self.kappa
        if D > 0:
            r = np.sqrt(D)
            L, U = k - r, k + r
            if v == L:
                out = np.full_like(t, L)
            else:
                q = (v - U) / (v - L) * np.exp(r * t)
                out = (U - L * q) / (1.0 - q)
        elif D == 0:
            z0 = v - k
            out = k + z0 / (1.0 - 0.5 * z0 * t)
        else:
            c = np.sqrt(-D)
            out = k + c * np.tan(0.5 * c * t + np.arctan((v - k) / c))
        return float(out) if out.ndim == 0 else out

    def limit(self, v: float) -> float:
        """Long-time limit from ``v`` (``inf`` if it blows up)."""
        if not np.isfinite(self.t_star(v)):
            D = self.disc
            if D > 0 and v == self.U:
                return float(self.U)
            return float(self.L) if D > 0 else float(self.kappa)
        return np.inf


def scalar_closed_form(kappa: float, g: float) -> ScalarRiccatiSolution:
    return ScalarRiccatiSolution(float(kappa), float(g))


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    dt: float
    seed: int
    generator: str = "numpy.PCG64"


def mc_exponential_moment(
    model: CanonicalModel,
    u: ArrayLike,
    X0: ArrayLike,
    T: float,
    n_paths: int = 100_000,
    dt: float | None = None,
    seed: int = 0,
    *,
    chunk: int = 1 << 17,
    check_region: bool = True,
) -> MCEstimate:
    """Euler estimate of ``E exp(u . X_T)`` for the canonical state.

    The square-root coordinates use full truncation: negative parts are
    clipped inside the diffusion coefficients only. Paths are split into
    chunks, each with its own stream spawned from ``seed``, so results do
    not depend on scheduling.

    Raises
    ------
    ExplodesBeforeT
        If ``T*(u) <= T``.
    Underresolved
        If the relative standard error exceeds 10%.
    """
    u = np.asarray(u, dtype=np.float64)
    X0 = np.asarray(X0, dtype=np.float64)
    if check_region and not blow_up_time(model, u).t_star > T:
        raise ExplodesBeforeT("u is not inside S_T; the moment is infinite")
    dt = T / 2000.0 if dt is None else float(dt)
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps
    sq = np.sqrt(dt)
    m, n = model.m, model.n
    idx = np.array(model.index_set, dtype=np.int64)
    drift_B = np.ascontiguousarray(model.A)  # X @ A == (B_hat X)^T
    b = np.ascontiguousarray(model.b_hat)
    has_D = bool(n > 0 and np.any(model.pi != 0.0))

    n_chunks = -(-int(n_paths) // chunk)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    pi = np.ascontiguousarray(model.pi)
    k_noise = idx.size + (n if has_D else 0)
    total = 0.0
    total_sq = 0.0
    done = 0
    for ss in streams:
        N = min(chunk, int(n_paths) - done)
        rng = np.random.Generator(np.random.PCG64(ss))
        X = np.tile(X0, (N, 1))
        Z = np.empty((N, k_noise))
        for _ in range(n_steps):
            rng.standard_normal(out=Z)
            K.euler_step(X, Z, b, drift_B, idx, pi, dt, sq, has_D)
        pay = np.exp(X @ u)
        total += float(pay.sum())
        total_sq += float((pay * pay).sum())
        done += N
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0) * done / max(done - 1, 1)
    stderr = float(np.sqrt(var / done))
    if mean > 0 and stderr / mean > 0.1:
        raise Underresolved(f"relative standard error {stderr / mean:.3g} exceeds 10%")
    return MCEstimate(mean, stderr, done, dt, int(seed))


# --------------------------------------------------------------------------
# stable manifold tracer


def manifold_shoot(
    model: CanonicalModel,
    w: ArrayLike,
    nu: ArrayLike,
    *,
    eps: float = 1e-6,
    radius: float = 1.0,
    n_points: int = 201,
    t_max: float = 500.0,
) -> NDArray[np.float64]:
    """Polyline through the stable manifold of a type-1 equilibrium.

    Integrates ``y' = -f(y, w)`` from ``nu +- eps e_s`` (``e_s`` the stable
    eigenvector) until the distance from ``nu`` reaches ``radius``. Both
    branches are joined through ``nu`` and resampled uniformly in arc
    length. For ``m = 1`` the manifold is the single point ``nu``.

    Raises
    ------
    NotType1
        If ``nu`` is not hyperbolic with exactly one positive eigenvalue, or
        ``m > 2``.
    """
    w = model.check_kernel(w)
    nu = np.asarray(nu, dtype=np.float64)
    kind = classify(model, nu, w)
    if not (kind.label == "unstable" and kind.type_k == 1):
        raise NotType1(f"equilibrium is {kind}")
    if model.m == 1:
        return nu[None, :].copy()
    if model.m != 2:
        raise NotType1("the tracer handles m <= 2 only")

    J = jacobian(model, nu)
    vals, vecs = np.linalg.eig(J)
    k = int(np.argmin(vals.real))
    e_s = np.real(vecs[:, k])
    e_s /= np.linalg.norm(e_s)

    def back(_t, y):
        return -rhs_f(model, y, w)

    def far(_t, y):
        return np.linalg.norm(y - nu) - radius

    far.terminal = True

    branches = []
    for sgn in (-1.0, 1.0):
        sol = solve_ivp(
            back,
            (0.0, t_max),
            nu + sgn * eps * e_s,
            method="DOP853",
            rtol=1e-12,
            atol=1e-14,
            events=far,
            dense_output=True,
        )
        ts = np.linspace(0.0, sol.t[-1], 4000)
        branches.append(sol.sol(ts).T)
    pts = np.vstack([branches[0][::-1], nu[None, :], branches[1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    keep = np.concatenate([[True], seg > 0])
    s, pts = s[keep], pts[keep]
    target = np.linspace(0.0, s[-1], n_points)
    return np.column_stack([np.interp(target, s, pts[:, j]) for j in range(pts.shape[1])])

