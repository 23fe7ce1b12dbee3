"""Membership in the long-term region ``S_inf`` and long-term growth rates.

``S_inf`` is the set of exponents whose exponential moment stays finite for
every horizon. For fixed ``w`` its interior is the basin of ``eta(w)`` and
its boundary is made of the stable sets of the unstable equilibria.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._rays import RAY_CAP, bisect_ray, parallel_map, ray_directions
from .equilibrium import enumerate_equilibria, eta, fD_membership
from .errors import DomainError, MomentExplodes, NotInD
from .model import CanonicalModel
from .riccati import BlownUp, Converged, HorizonReached, integrate_ricV

Region = Literal["interior", "boundary", "outside", "indeterminate"]

INTERIOR_TOL = 1e-8
BOUNDARY_BAND = 1e-6


@dataclass(frozen=True, eq=False)
class RegionVerdict:
    """Membership of an exponent with a certificate.

    ``certificate`` is the limit equilibrium for interior and boundary
    verdicts and the blow-up time for outside verdicts.
    """

    region: Region
    certificate: Any = None
    tolerance: float = INTERIOR_TOL
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def is_outside(self) -> bool:
        return self.region == "outside"


@dataclass(frozen=True, eq=False)
class BoundarySection:
    """Boundary radii of a convex section along rays from ``base_point``."""

    w: NDArray[np.float64]
    rays: NDArray[np.float64]
    radii: NDArray[np.float64]
    base_point: NDArray[np.float64]
    flags: tuple[str, ...]

    @property
    def points(self) -> NDArray[np.float64]:
        """Boundary points ``base + r d`` (rows with infinite ``r`` are inf)."""
        with np.errstate(invalid="ignore"):
            return self.base_point + self.radii[:, None] * self.rays

    def to_csv(self) -> str:
        m = self.rays.shape[1]
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow([f"ray_x{i + 1}" for i in range(m)] + ["radius", "flag"])
        for d, r, f in zip(self.rays, self.radii, self.flags):
            wr.writerow([f"{x:.17g}" for x in d] + [f"{r:.17g}", f])
        return buf.getvalue()


def _snap(model: CanonicalModel, limit: np.ndarray, w: np.ndarray):
    eqs = enumerate_equilibria(model, w)
    if not eqs:
        return None, np.inf
    dist = [float(np.linalg.norm(e.nu - limit)) for e in eqs]
    k = int(np.argmin(dist))
    return eqs[k], dist[k]


def _saddle_passed(model: CanonicalModel, v: np.ndarray, w: np.ndarray, base: np.ndarray):
    """The non-``eta`` equilibrium the trajectory from ``v`` passes closest to."""
    others = [e for e in enumerate_equilibria(model, w) if not np.allclose(e.nu, base, rtol=0.0, atol=1e-12)]
    if not others:
        return None
    ys = integrate_ricV(model, v, w).y
    dist = [float(np.min(np.linalg.norm(ys - e.nu, axis=1))) for e in others]
    return others[int(np.argmin(dist))]


def in_S_infinity(model: CanonicalModel, u: ArrayLike, *, band: float = BOUNDARY_BAND, **opts: Any) -> RegionVerdict:
    """Classify ``u = (v, w)`` relative to ``S_inf``.

    Outside iff the Riccati solution blows up. Interior iff it settles at
    ``eta(w)`` with ``w`` interior to the domain of ``eta``. Boundary iff it
    settles at an unstable equilibrium or ``w`` is on the domain boundary.
    A run that hits the horizon cap is reported as indeterminate.

    Stable sets of saddles are numerically unstable, so for ``w`` interior
    to the domain a point is also reported as boundary when scaling
    ``v - eta(w)`` by ``1 -+ band`` lands on both sides. The certificate is
    then the saddle the inner trajectory passes closest to.
    """
    v, w = model.split(u)
    w = model.check_kernel(w)
    traj = integrate_ricV(model, v, w, record=False, **opts)
    st = traj.status
    if isinstance(st, HorizonReached):
        return RegionVerdict("indeterminate", traj.y_end, details={"t_end": st.t_end})
    mem = fD_membership(model, w)
    if isinstance(st, BlownUp):
        raw = RegionVerdict("outside", st.t_star, details={"components": st.components})
    else:
        assert isinstance(st, Converged)
        eq, dist = _snap(model, st.limit, w)
        details = {"limit": st.limit, "snap_distance": dist, "membership": mem.verdict}
        if eq is None:
            return RegionVerdict("indeterminate", st.limit, details=details)
        is_eta = eq.sign_pattern and all(b == "minus" for b in eq.sign_pattern.values())
        if not (mem.verdict == "interior" and is_eta and eq.kind.is_stable):
            return RegionVerdict("boundary", eq.nu, details=details)
        raw = RegionVerdict("interior", eq.nu, details=details)
    if mem.verdict != "interior" or band <= 0.0:
        return raw
    base = eta(model, w)
    if not np.any(v != base):
        return raw
    inner = base + (1.0 - band) * (v - base)
    if raw.region == "interior":
        other = integrate_ricV(model, base + (1.0 + band) * (v - base), w, record=False, **opts)
        straddles = isinstance(other.status, BlownUp)
    else:
        other = integrate_ricV(model, inner, w, record=False, **opts)
        straddles = isinstance(other.status, Converged)
    if not straddles:
        return raw
    saddle = _saddle_passed(model, inner, w, base)
    if saddle is None:
        return raw
    details = {"band": band, "raw_region": raw.region, "membership": mem.verdict}
    return RegionVerdict("boundary", saddle.nu, band, details)


def growth_rate(model: CanonicalModel, u: ArrayLike, verdict: RegionVerdict | None = None) -> float:
    """Long-term growth rate ``lim (1/T) log E exp(u . X_T)``.

    Equals ``1/2 w^T pi_0 w + b_D . w + b_V . nu`` with ``nu = eta(w)`` on the
    interior and the certificate equilibrium on the boundary.

    Raises
    ------
    MomentExplodes
        If ``u`` is outside ``S_inf``.
    """
    v, w = model.split(u)
    if verdict is None:
        verdict = in_S_infinity(model, u)
    if verdict.region == "outside":
        raise MomentExplodes(f"u is outside S_inf (blow-up at t = {verdict.certificate:.6g})")
    if verdict.region == "indeterminate":
        raise DomainError("membership is indeterminate; cannot select the limit equilibrium")
    nu = np.asarray(verdict.certificate, dtype=np.float64)
    return model.constant_rate(w) + float(model.b_V @ nu)


def interior_growth_rate(model: CanonicalModel, w: ArrayLike) -> float:
    """Growth rate on the interior, ``1/2 w^T pi_0 w + b_D . w + b_V . eta(w)``."""
    w = model.check_kernel(w)
    return model.constant_rate(w) + float(model.b_V @ eta(model, w))


def stock_growth_rate(model: CanonicalModel, theta: ArrayLike, p: float) -> float:
    """``Lambda(p)``, the growth rate of ``E exp(p theta . X_T)``."""
    return growth_rate(model, p * np.asarray(theta, dtype=np.float64))


def _inside_sinf(model: CanonicalModel, w: np.ndarray, base: np.ndarray, d: np.ndarray):
    def inside(r: float) -> bool:
        traj = integrate_ricV(model, base + r * d, w, record=False)
        return not isinstance(traj.status, BlownUp)

    return inside


def trace_Sinf_boundary(
    model: CanonicalModel,
    w: ArrayLike,
    rays: int | Sequence[ArrayLike] = 64,
    tol: float = 1e-6,
    *,
    cap: float = RAY_CAP,
    workers: int | None = None,
) -> BoundarySection:
    """Boundary of the section ``S_inf(w)`` along rays from ``eta(w)``.

    Each ray is expanded geometrically and bisected on membership; the
    section is closed and convex with ``eta(w)`` inside, so every ray meets
    the boundary at most once. Runs that hit the horizon cap count as
    inside.
    """
    w = model.check_kernel(w)
    try:
        base = eta(model, w)
    except NotInD as exc:
        raise DomainError(f"w is outside the domain of eta: {exc}") from None
    dirs = ray_directions(model.m, rays) if isinstance(rays, (int, np.integer)) else np.atleast_2d(
        np.asarray(rays, dtype=np.float64)
    )
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    def one(d: np.ndarray) -> tuple[float, str]:
        return bisect_ray(_inside_sinf(model, w, base, d), tol=tol, cap=cap)

    out = parallel_map(one, list(dirs), workers)
    radii = np.array([r for r, _ in out])
    flags = tuple(f for _, f in out)
    return BoundarySection(w, dirs, radii, base, flags)
