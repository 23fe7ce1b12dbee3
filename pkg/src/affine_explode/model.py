"""Admissible affine diffusion specifications and their canonical form.

A raw specification describes

    dY = (b + B Y) dt + sigma(Y) dW,   sigma sigma^T = a + sum_i Y_i alpha_i

on R_+^m x R^n. The canonical model obtained from a linear change of state
``X = Lambda Y`` has volatility block ``diag_I(x)`` and dependent block
``pi_0 + sum_i x_i pi_i``; its Riccati system is driven by the matrix
``A = B_hat^T`` with blocks ``[[A_V, A_C], [0, A_D]]``.

Exponents transform as ``u_Y = Lambda^T u_X`` so that ``u_X . X = u_Y . Y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    AdmissibilityError,
    DimensionMismatch,
    KernelViolation,
    NotCanonicalizable,
)

FloatArray = NDArray[np.float64]

PSD_TOL = 1e-10
MARTINGALE_TOL = 1e-10
KERNEL_RTOL = 1e-12


def _frozen(x: ArrayLike, shape: tuple[int, ...], name: str) -> FloatArray:
    arr = np.array(x, dtype=np.float64)
    if arr.size == 0 and int(np.prod(shape)) == 0:
        arr = arr.reshape(shape)
    if arr.shape != shape:
        raise DimensionMismatch(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name}: entries must be finite")
    arr.setflags(write=False)
    return arr


def _scale(M: np.ndarray) -> float:
    return 1.0 + (float(np.max(np.abs(M))) if M.size else 0.0)


def _is_symmetric(M: np.ndarray, tol: float = PSD_TOL) -> bool:
    return M.size == 0 or float(np.max(np.abs(M - M.T))) <= tol * _scale(M)


def _min_eig(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def _is_psd(M: np.ndarray, tol: float = PSD_TOL) -> bool:
    return _min_eig(M) >= -tol * _scale(M)


# --------------------------------------------------------------------------
# validation report


@dataclass(frozen=True)
class Violation:
    name: str
    detail: str

    def __str__(self) -> str:
        return f"CONSTRAINT {self.name}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def names(self) -> set[str]:
        return {v.name for v in self.violations}

    def lines(self) -> list[str]:
        return [str(v) for v in self.violations]

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


# --------------------------------------------------------------------------
# raw specification


@dataclass(frozen=True, eq=False)
class AffineModelSpec:
    """Raw affine diffusion parameters on the canonical state space.

    Parameters
    ----------
    m, n : int
        Number of volatility and dependent state variables.
    b : array_like, shape (d,)
        Drift constant.
    B : array_like, shape (d, d)
        Drift matrix, column ``i`` multiplies ``Y_i``.
    a : array_like, shape (d, d)
        Constant diffusion block.
    alpha : array_like, shape (d, d, d)
        ``alpha[i]`` is the diffusion block multiplying ``Y_i``.
    """

    m: int
    n: int
    b: FloatArray
    B: FloatArray
    a: FloatArray
    alpha: FloatArray

    def __post_init__(self) -> None:
        m, n = int(self.m), int(self.n)
        if m < 1 or n < 0:
            raise DimensionMismatch(f"need m >= 1 and n >= 0, got m={m}, n={n}")
        d = m + n
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "b", _frozen(self.b, (d,), "b"))
        object.__setattr__(self, "B", _frozen(self.B, (d, d), "B"))
        object.__setattr__(self, "a", _frozen(self.a, (d, d), "a"))
        object.__setattr__(self, "alpha", _frozen(self.alpha, (d, d, d), "alpha"))

    @property
    def d(self) -> int:
        return self.m + self.n


def validate_admissible(spec: AffineModelSpec) -> ValidationReport:
    """List every violated admissibility constraint.

    The report is empty iff the parameters are admissible and ``B_V`` is
    upper triangular with strictly negative eigenvalues.
    """
    m, n = spec.m, spec.n
    out: list[Violation] = []

    def zero(M: np.ndarray, scale: float) -> bool:
        return M.size == 0 or float(np.max(np.abs(M))) <= PSD_TOL * scale

    mats = [("a", spec.a)] + [(f"alpha[{i + 1}]", spec.alpha[i]) for i in range(spec.d)]
    for name, M in mats:
        if not _is_symmetric(M):
            out.append(Violation("SYMMETRIC", f"{name} is not symmetric"))
        if not _is_psd(M):
            out.append(Violation("PSD", f"{name} has eigenvalue {_min_eig(M):.6g} < 0"))

    for i in range(m, spec.d):
        if not zero(spec.alpha[i], 1.0):
            out.append(Violation("ALPHA_DEPENDENT", f"alpha[{i + 1}] must vanish"))

    sa = _scale(spec.a)
    if not (zero(spec.a[:m, :m], sa) and zero(spec.a[:m, m:], sa) and zero(spec.a[m:, :m], sa)):
        out.append(Violation("A_BLOCKS", "a may be nonzero only in its dependent block"))

    for i in range(m):
        al = spec.alpha[i]
        s = _scale(al)
        vv = al[:m, :m].copy()
        vv[i, i] = 0.0
        vd = np.delete(al[:m, m:], i, axis=0)
        dv = np.delete(al[m:, :m], i, axis=1)
        if not (zero(vv, s) and zero(vd, s) and zero(dv, s)):
            out.append(
                Violation(
                    "ALPHA_STRUCTURE",
                    f"alpha[{i + 1}] volatility block must be c*e{i + 1}e{i + 1}^T "
                    f"and its cross block must be supported on row {i + 1}",
                )
            )

    sb = _scale(spec.b)
    for i in range(m):
        if spec.b[i] < -PSD_TOL * sb:
            out.append(Violation("B_NONNEGATIVE", f"b[{i + 1}] = {spec.b[i]:.6g} < 0"))

    sB = _scale(spec.B)
    if not zero(spec.B[:m, m:], sB):
        out.append(Violation("B_BLOCK", "B must have a zero upper-right m x n block"))
    BV = spec.B[:m, :m]
    for i in range(m):
        for j in range(m):
            if i != j and BV[i, j] < -PSD_TOL * sB:
                out.append(Violation("BV_OFFDIAG", f"B_V[{i + 1},{j + 1}] = {BV[i, j]:.6g} < 0"))
            if i > j and abs(BV[i, j]) > PSD_TOL * sB:
                out.append(
                    Violation("BV_UPPER_TRIANGULAR", f"B_V[{i + 1},{j + 1}] = {BV[i, j]:.6g} != 0")
                )
    for i in range(m):
        if not BV[i, i] < 0.0:
            out.append(
                Violation(
                    "BV_NEGATIVE_EIGENVALUES",
                    f"B_V[{i + 1},{i + 1}] = {BV[i, i]:.6g} is not strictly negative",
                )
            )
    return ValidationReport(tuple(out))


# --------------------------------------------------------------------------
# canonical model


@dataclass(frozen=True, eq=False)
class CanonicalModel:
    """Affine diffusion in canonical form.

    Parameters
    ----------
    m, n : int
        Volatility and dependent dimensions.
    index_set : sequence of int
        Zero-based volatility indices with a quadratic Riccati term.
    A_V : array_like, shape (m, m)
        Lower-triangular volatility block of ``A``.
    A_C : array_like, shape (m, n)
        Coupling block, enters ``g`` as ``A_C w``.
    A_D : array_like, shape (n, n)
        Dependent block; exponents must satisfy ``A_D w = 0``.
    b_hat : array_like, shape (m + n,)
        Drift constant of the canonical state.
    pi : array_like, shape (m + 1, n, n)
        ``pi[0]`` is the constant dependent diffusion block and ``pi[i]``
        multiplies ``x_i``.
    transform : array_like, shape (d, d), optional
        The map ``Lambda`` with ``X = Lambda Y``. Identity by default.
    """

    m: int
    n: int
    index_set: tuple[int, ...]
    A_V: FloatArray
    A_C: FloatArray
    A_D: FloatArray
    b_hat: FloatArray
    pi: FloatArray
    transform: FloatArray | None = field(default=None)

    def __post_init__(self) -> None:
        m, n = int(self.m), int(self.n)
        if m < 1 or n < 0:
            raise DimensionMismatch(f"need m >= 1 and n >= 0, got m={m}, n={n}")
        d = m + n
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        idx = tuple(sorted({int(i) for i in self.index_set}))
        object.__setattr__(self, "index_set", idx)
        object.__setattr__(self, "A_V", _frozen(self.A_V, (m, m), "A_V"))
        object.__setattr__(self, "A_C", _frozen(self.A_C, (m, n), "A_C"))
        object.__setattr__(self, "A_D", _frozen(self.A_D, (n, n), "A_D"))
        object.__setattr__(self, "b_hat", _frozen(self.b_hat, (d,), "b_hat"))
        object.__setattr__(self, "pi", _frozen(self.pi, (m + 1, n, n), "pi"))
        lam = np.eye(d) if self.transform is None else self.transform
        object.__setattr__(self, "transform", _frozen(lam, (d, d), "transform"))
        if any(i < 0 or i >= m for i in idx):
            raise DimensionMismatch(f"index_set entries must lie in 0..{m - 1}")
        report = validate_canonical(self)
        if report:
            raise AdmissibilityError(report)

    # ---- derived blocks -------------------------------------------------

    @property
    def d(self) -> int:
        return self.m + self.n

    @cached_property
    def A(self) -> FloatArray:
        m = self.m
        A = np.zeros((self.d, self.d))
        A[:m, :m] = self.A_V
        A[:m, m:] = self.A_C
        A[m:, m:] = self.A_D
        A.setflags(write=False)
        return A

    @cached_property
    def imask(self) -> FloatArray:
        mask = np.zeros(self.m)
        mask[list(self.index_set)] = 1.0
        mask.setflags(write=False)
        return mask

    @property
    def b_V(self) -> FloatArray:
        return self.b_hat[: self.m]

    @property
    def b_D(self) -> FloatArray:
        return self.b_hat[self.m :]

    @cached_property
    def kernel_basis(self) -> FloatArray:
        return kernel_AD(self)

    @cached_property
    def transform_inv(self) -> FloatArray:
        inv = np.linalg.inv(self.transform)
        inv.setflags(write=False)
        return inv

    # ---- Riccati ingredients -------------------------------------------

    def g(self, w: ArrayLike) -> FloatArray:
        """Constant term ``g(w) = 1/2 (w^T pi_i w)_i + A_C w``."""
        w = self._w(w)
        quad = np.einsum("j,ijk,k->i", w, self.pi[1:], w) if self.n else np.zeros(self.m)
        return 0.5 * quad + self.A_C @ w

    def g_jacobian(self, w: ArrayLike) -> FloatArray:
        """Derivative of ``g`` in ``w``, shape (m, n)."""
        w = self._w(w)
        return np.einsum("ijk,k->ij", self.pi[1:], w) + self.A_C

    def constant_rate(self, w: ArrayLike) -> float:
        """``1/2 w^T pi_0 w + b_D . w``."""
        w = self._w(w)
        return float(0.5 * w @ self.pi[0] @ w + self.b_D @ w)

    def _w(self, w: ArrayLike) -> FloatArray:
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if w.shape != (self.n,):
            raise DimensionMismatch(f"w: expected length {self.n}, got {w.shape[0]}")
        return w

    def check_kernel(self, w: ArrayLike) -> FloatArray:
        """Return ``w`` as an array, raising if ``A_D w != 0``."""
        w = self._w(w)
        if self.n:
            res = float(np.linalg.norm(self.A_D @ w))
            if res > 1e-10 * (1.0 + float(np.linalg.norm(w))) * _scale(self.A_D):
                raise KernelViolation(f"|A_D w| = {res:.3g}: w is not in Ker A_D")
        return w

    def split(self, u: ArrayLike) -> tuple[FloatArray, FloatArray]:
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        if u.shape != (self.d,):
            raise DimensionMismatch(f"u: expected length {self.d}, got {u.shape[0]}")
        return u[: self.m].copy(), u[self.m :].copy()

    # ---- state / exponent maps ----------------------------------------

    def exponent_from_original(self, u_Y: ArrayLike) -> FloatArray:
        """Exponent for X given the exponent for the original state Y."""
        return np.linalg.solve(self.transform.T, np.asarray(u_Y, dtype=np.float64))

    def exponent_to_original(self, u_X: ArrayLike) -> FloatArray:
        return self.transform.T @ np.asarray(u_X, dtype=np.float64)

    def state_from_original(self, Y: ArrayLike) -> FloatArray:
        return self.transform @ np.asarray(Y, dtype=np.float64)

    def state_to_original(self, X: ArrayLike) -> FloatArray:
        return self.transform_inv @ np.asarray(X, dtype=np.float64)

    def as_spec(self) -> AffineModelSpec:
        """The canonical model written as a raw specification for X."""
        m, d = self.m, self.d
        a = np.zeros((d, d))
        a[m:, m:] = self.pi[0]
        alpha = np.zeros((d, d, d))
        for i in range(m):
            alpha[i, i, i] = self.imask[i]
            alpha[i, m:, m:] = self.pi[i + 1]
        return AffineModelSpec(m=m, n=self.n, b=self.b_hat, B=self.A.T, a=a, alpha=alpha)


def validate_canonical(model: CanonicalModel) -> ValidationReport:
    """Check the invariants of a canonical model."""
    m = model.m
    out: list[Violation] = []
    AV = model.A_V
    s = _scale(AV)
    if not model.index_set:
        out.append(Violation("INDEX_SET", "the quadratic index set must be nonempty"))
    for i in range(m):
        if not AV[i, i] < 0.0:
            out.append(Violation("AV_DIAGONAL", f"A_V[{i + 1},{i + 1}] = {AV[i, i]:.6g} must be < 0"))
        for k in range(m):
            if k > i and abs(AV[i, k]) > PSD_TOL * s:
                out.append(
                    Violation("AV_LOWER_TRIANGULAR", f"A_V[{i + 1},{k + 1}] = {AV[i, k]:.6g} != 0")
                )
            if k < i and AV[i, k] < -PSD_TOL * s:
                out.append(Violation("AV_OFFDIAG", f"A_V[{i + 1},{k + 1}] = {AV[i, k]:.6g} < 0"))
    for i in range(m + 1):
        P = model.pi[i]
        if not _is_symmetric(P):
            out.append(Violation("SYMMETRIC", f"pi[{i}] is not symmetric"))
        if _min_eig(P) < -PSD_TOL:
            out.append(Violation("PSD", f"pi[{i}] has eigenvalue {_min_eig(P):.6g} < 0"))
    sb = _scale(model.b_hat)
    for i in range(m):
        if model.b_hat[i] < -PSD_TOL * sb:
            out.append(Violation("B_NONNEGATIVE", f"b_hat[{i + 1}] = {model.b_hat[i]:.6g} < 0"))
    return ValidationReport(tuple(out))


def is_nonsingular_m_matrix(M: ArrayLike, tol: float = 1e-12) -> bool:
    """Nonpositive off-diagonals, positive diagonal and nonnegative inverse."""
    M = np.asarray(M, dtype=np.float64)
    off = M - np.diag(np.diag(M))
    if np.any(off > tol) or np.any(np.diag(M) <= 0.0):
        return False
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        return False
    return bool(np.all(inv >= -tol * (1.0 + np.max(np.abs(inv)))))


def kernel_AD(model: CanonicalModel) -> FloatArray:
    """Orthonormal basis of ``Ker A_D`` as columns, shape (n, k)."""
    AD = np.asarray(model.A_D)
    n = AD.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    _, sv, vt = np.linalg.svd(AD)
    smax = float(sv[0]) if sv.size else 0.0
    if smax == 0.0:
        return np.eye(n)
    rank = int(np.sum(sv > KERNEL_RTOL * smax))
    return vt[rank:].T.copy()


def to_canonical(spec: AffineModelSpec) -> CanonicalModel:
    """Canonical form of an admissible specification via a diagonal
    volatility transform.

    With ``c_i = alpha_i[i, i]`` the transform uses ``Lambda_V = diag(1/c_i)``
    (1 where ``c_i = 0``) and removes the volatility/dependent covariance
    with ``Lambda_C[:, i] = -w_i / c_i``.

    Raises
    ------
    NotCanonicalizable
        If the parameters are not admissible or no volatility factor
        diffuses.
    """
    report = validate_admissible(spec)
    if report:
        raise NotCanonicalizable("specification is not admissible:\n" + "\n".join(report.lines()))
    m, n, d = spec.m, spec.n, spec.d
    c = np.array([spec.alpha[i, i, i] for i in range(m)])
    cscale = max(1.0, float(np.max(np.abs(spec.alpha))))
    active = c > PSD_TOL * cscale
    if not np.any(active):
        raise NotCanonicalizable("no volatility factor has a diffusion term")

    lam = np.where(active, 1.0 / np.where(active, c, 1.0), 1.0)
    Lam = np.eye(d)
    Lam[:m, :m] = np.diag(lam)
    for i in range(m):
        if active[i]:
            Lam[m:, i] = -spec.alpha[i, i, m:] / c[i]

    pi = np.zeros((m + 1, n, n))
    pi[0] = spec.a[m:, m:]
    for i in range(m):
        Q = spec.alpha[i, m:, m:]
        if active[i]:
            wi = spec.alpha[i, i, m:]
            pi[i + 1] = c[i] * (Q - np.outer(wi, wi) / c[i])
        else:
            pi[i + 1] = Q
        pi[i + 1] = 0.5 * (pi[i + 1] + pi[i + 1].T)
    pi[0] = 0.5 * (pi[0] + pi[0].T)

    b_hat = Lam @ spec.b
    B_hat = Lam @ spec.B @ np.linalg.inv(Lam)
    A = B_hat.T
    # clean the structurally zero entries left by rounding
    A_V = np.tril(A[:m, :m])
    return CanonicalModel(
        m=m,
        n=n,
        index_set=tuple(int(i) for i in np.flatnonzero(active)),
        A_V=A_V,
        A_C=A[:m, m:],
        A_D=A[m:, m:],
        b_hat=b_hat,
        pi=pi,
        transform=Lam,
    )


# --------------------------------------------------------------------------
# martingale condition


@dataclass(frozen=True)
class MartingaleVerdict:
    holds: bool
    riccati_residual: FloatArray
    kernel_residual: FloatArray
    constant_residual: float

    @property
    def max_residual(self) -> float:
        parts = [abs(self.constant_residual)]
        parts += [float(np.max(np.abs(r))) for r in (self.riccati_residual, self.kernel_residual) if r.size]
        return max(parts)


def _martingale_tol(theta: np.ndarray) -> float:
    return MARTINGALE_TOL * (1.0 + float(theta @ theta))


def check_martingale(model: CanonicalModel, theta: ArrayLike) -> MartingaleVerdict:
    """Check that ``exp(theta . X)`` is a martingale.

    Holds iff ``f(theta_V, theta_D) = 0``, ``A_D theta_D = 0`` and
    ``1/2 theta_D^T pi_0 theta_D + b_hat . theta = 0``.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    v, w = model.split(theta)
    f = 0.5 * model.imask * v * v + model.A_V @ v + model.g(w)
    kres = model.A_D @ w
    cres = float(0.5 * w @ model.pi[0] @ w + model.b_hat @ theta)
    tol = _martingale_tol(theta)
    holds = bool(
        np.all(np.abs(f) <= tol) and np.all(np.abs(kres) <= tol) and abs(cres) <= tol
    )
    return MartingaleVerdict(holds, f, kres, cres)


def check_martingale_spec(spec: AffineModelSpec, theta: ArrayLike) -> MartingaleVerdict:
    """Martingale check on a raw specification (exponent for Y).

    Uses ``1/2 theta^T alpha_i theta + (B^T theta)_i = 0`` for every ``i``
    and ``1/2 theta^T a theta + b . theta = 0``.
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.shape != (spec.d,):
        raise DimensionMismatch(f"theta: expected length {spec.d}")
    lin = 0.5 * np.einsum("j,ijk,k->i", theta, spec.alpha, theta) + spec.B.T @ theta
    cres = float(0.5 * theta @ spec.a @ theta + spec.b @ theta)
    tol = _martingale_tol(theta)
    holds = bool(np.all(np.abs(lin) <= tol) and abs(cres) <= tol)
    return MartingaleVerdict(holds, lin[: spec.m], lin[spec.m :], cres)


@dataclass(frozen=True, eq=False)
class EquityMapping:
    """Log-price exponent ``theta`` and canonical initial state ``X0``."""

    theta: FloatArray
    X0: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "X0", np.asarray(self.X0, dtype=np.float64).reshape(-1))
        if self.theta.shape != self.X0.shape:
            raise DimensionMismatch("theta and X0 must have the same length")

    def verdict(self, model: CanonicalModel) -> MartingaleVerdict:
        return check_martingale(model, self.theta)


def canonical_from_blocks(
    A_V: ArrayLike,
    A_C: ArrayLike,
    A_D: ArrayLike,
    b_hat: ArrayLike,
    pi: Sequence[ArrayLike],
    index_set: Sequence[int] | None = None,
) -> CanonicalModel:
    """Convenience constructor that infers the dimensions."""
    A_V = np.atleast_2d(np.asarray(A_V, dtype=np.float64))
    m = A_V.shape[0]
    A_D = np.asarray(A_D, dtype=np.float64)
    n = A_D.shape[0] if A_D.ndim == 2 else 0
    A_D = A_D.reshape(n, n)
    A_C = np.asarray(A_C, dtype=np.float64).reshape(m, n)
    pi = np.asarray(pi, dtype=np.float64).reshape(m + 1, n, n)
    idx = tuple(range(m)) if index_set is None else tuple(index_set)
    return CanonicalModel(m, n, idx, A_V, A_C, A_D, b_hat, pi)
