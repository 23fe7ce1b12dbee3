"""Equilibria of the volatility Riccati system.

Because ``A_V`` is lower triangular, ``f(y, w) = 0`` can be solved one
coordinate at a time: coordinate ``i`` is a quadratic in ``y_i`` when
``i`` is in the index set and linear otherwise, with every earlier
coordinate already fixed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import NotAnEquilibrium, NotInD
from .model import CanonicalModel
from .riccati import jacobian, rhs_f

DISC_BAND = 1e-12
ZERO_EIG = 1e-10

Branch = Literal["minus", "plus"]


@dataclass(frozen=True)
class Kind:
    """Stability class read off the Jacobian diagonal."""

    label: Literal["stable", "unstable", "nonhyperbolic"]
    type_k: int = 0
    zero_indices: tuple[int, ...] = ()

    @property
    def is_stable(self) -> bool:
        return self.label == "stable"

    @property
    def is_hyperbolic(self) -> bool:
        return self.label != "nonhyperbolic"

    def __str__(self) -> str:
        if self.label == "unstable":
            return f"unstable(type {self.type_k})"
        if self.label == "nonhyperbolic":
            return f"nonhyperbolic(zero at {','.join(str(i + 1) for i in self.zero_indices)})"
        return "stable"


def kind_from_diagonal(diag: ArrayLike, zero_tol: float = ZERO_EIG) -> Kind:
    diag = np.asarray(diag, dtype=np.float64)
    zeros = tuple(int(i) for i in np.flatnonzero(np.abs(diag) <= zero_tol))
    if zeros:
        return Kind("nonhyperbolic", int(np.sum(diag > zero_tol)), zeros)
    k = int(np.sum(diag > 0.0))
    return Kind("stable") if k == 0 else Kind("unstable", k)


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """A root ``nu`` of ``f(., w)``.

    ``sign_pattern`` maps each quadratic index to the root branch taken.
    The Jacobian is lower triangular, so ``jacobian_diag`` holds its
    eigenvalues.
    """

    nu: NDArray[np.float64]
    sign_pattern: dict[int, Branch]
    jacobian_diag: NDArray[np.float64]
    kind: Kind

    def pattern_str(self) -> str:
        return "".join("-" if self.sign_pattern[i] == "minus" else "+" for i in sorted(self.sign_pattern))


@dataclass(frozen=True, eq=False)
class DMembership:
    """Position of ``w`` relative to the domain of ``eta``.

    ``index_set_M`` lists the quadratic indices whose discriminant vanishes
    (boundary case). ``coupling_ok`` records whether ``A_V[i, j] = 0`` for
    every ``i > j`` with ``i`` in M and ``j`` outside M.
    """

    verdict: Literal["interior", "boundary", "outside"]
    discriminants: dict[int, float]
    index_set_M: tuple[int, ...] = ()
    coupling_ok: bool = True
    subsystem_equilibrium: NDArray[np.float64] | None = None


def _partial_sum(model: CanonicalModel, y: np.ndarray, i: int, gi: float) -> float:
    return float(model.A_V[i, :i] @ y[:i]) + gi


def discriminant(model: CanonicalModel, y: np.ndarray, i: int, gi: float) -> float:
    """``A_ii^2 - 2 (sum_{k<i} A_ik y_k + g_i)``."""
    a = model.A_V[i, i]
    return a * a - 2.0 * _partial_sum(model, y, i, gi)


def _gap(D: float) -> float:
    """Half-distance between the two roots; a discriminant within the band
    is a double root at the vertex, so the Jacobian entry is exactly 0."""
    return 0.0 if D <= DISC_BAND else float(np.sqrt(D))


def _eta_and_discs(model: CanonicalModel, w: np.ndarray) -> tuple[np.ndarray | None, dict[int, float]]:
    g = model.g(w)
    y = np.zeros(model.m)
    discs: dict[int, float] = {}
    for i in range(model.m):
        a = model.A_V[i, i]
        if model.imask[i]:
            D = discriminant(model, y, i, g[i])
            discs[i] = D
            if D < -DISC_BAND:
                return None, discs
            y[i] = -a - _gap(D)
        else:
            y[i] = -_partial_sum(model, y, i, g[i]) / a
    return y, discs


def eta(model: CanonicalModel, w: ArrayLike) -> NDArray[np.float64]:
    """The minimal (stable when hyperbolic) equilibrium ``eta(w)``.

    Raises
    ------
    NotInD
        If some discriminant along the recursion is below ``-1e-12``.
    """
    w = model.check_kernel(w)
    y, discs = _eta_and_discs(model, w)
    if y is None:
        i = max(discs)
        raise NotInD(f"discriminant {discs[i]:.6g} < 0 at index {i + 1}")
    return y


def eta_derivative(model: CanonicalModel, w: ArrayLike, direction: ArrayLike) -> NDArray[np.float64]:
    """Directional derivative of ``eta`` at an interior ``w``.

    Differentiating ``f(eta(w), w) = 0`` gives ``J eta' = -g_w(w) h``.
    """
    w = model.check_kernel(w)
    y = eta(model, w)
    J = jacobian(model, y)
    rhs = model.g_jacobian(w) @ np.asarray(direction, dtype=np.float64)
    return -np.linalg.solve(J, rhs)


def _make(model: CanonicalModel, nu: np.ndarray, pattern: dict[int, Branch]) -> Equilibrium:
    diag = np.diag(model.A_V) + model.imask * nu
    return Equilibrium(nu.copy(), dict(pattern), diag, kind_from_diagonal(diag))


def enumerate_equilibria(model: CanonicalModel, w: ArrayLike) -> list[Equilibrium]:
    """All equilibria of ``f(., w)``, at most ``2^|I|`` of them.

    Depth-first over root branches; a double root is emitted once with the
    ``minus`` label. The minimal equilibrium ``eta(w)`` comes first when it
    exists.
    """
    w = model.check_kernel(w)
    g = model.g(w)
    m = model.m
    out: list[Equilibrium] = []

    def dfs(i: int, y: np.ndarray, pattern: dict[int, Branch]) -> None:
        if i == m:
            out.append(_make(model, y, pattern))
            return
        a = model.A_V[i, i]
        if not model.imask[i]:
            y[i] = -_partial_sum(model, y, i, g[i]) / a
            dfs(i + 1, y, pattern)
            return
        D = discriminant(model, y, i, g[i])
        if D < -DISC_BAND:
            return
        if D <= DISC_BAND:
            y[i] = -a
            dfs(i + 1, y, {**pattern, i: "minus"})
            return
        r = np.sqrt(D)
        y_minus = y.copy()
        y_minus[i] = -a - r
        dfs(i + 1, y_minus, {**pattern, i: "minus"})
        y_plus = y.copy()
        y_plus[i] = -a + r
        dfs(i + 1, y_plus, {**pattern, i: "plus"})

    dfs(0, np.zeros(m), {})

    unique: list[Equilibrium] = []
    for e in out:
        if not any(np.allclose(e.nu, u.nu, rtol=1e-12, atol=1e-12) for u in unique):
            unique.append(e)
    return unique


def classify(model: CanonicalModel, nu: ArrayLike, w: ArrayLike, tol: float = 1e-8) -> Kind:
    """Stability class of an equilibrium from the signs of the Jacobian
    diagonal (zero threshold ``1e-10``).

    Raises
    ------
    NotAnEquilibrium
        If ``|f(nu, w)| > tol (1 + |nu|)``.
    """
    nu = np.asarray(nu, dtype=np.float64)
    w = model.check_kernel(w)
    res = float(np.linalg.norm(rhs_f(model, nu, w)))
    if res > tol * (1.0 + float(np.linalg.norm(nu))):
        raise NotAnEquilibrium(f"|f(nu, w)| = {res:.3g}")
    return kind_from_diagonal(np.diag(model.A_V) + model.imask * nu)


def fD_membership(model: CanonicalModel, w: ArrayLike) -> DMembership:
    """Interior / boundary / outside classification of ``w``.

    Interior iff every discriminant along the ``eta`` recursion exceeds
    ``1e-12``; boundary when some vanish within the band (those indices form
    ``M``); outside as soon as one is below ``-1e-12``.
    """
    w = model.check_kernel(w)
    y, discs = _eta_and_discs(model, w)
    if y is None:
        return DMembership("outside", discs)
    M = tuple(i for i, D in sorted(discs.items()) if abs(D) <= DISC_BAND)
    if not M:
        return DMembership("interior", discs)
    Mset = set(M)
    coupling_ok = all(
        model.A_V[i, j] == 0.0
        for i in M
        for j in range(i)
        if j not in Mset
    )
    return DMembership("boundary", discs, M, coupling_ok, y[list(M)].copy())
