"""Jitted Dormand-Prince 5(4) driver shared by the Riccati, compactified and
rescaled fixed-horizon systems.

Everything here works on plain float64 arrays so that the stepping loop runs
without Python overhead; the public modules wrap these kernels with typed
results. All three right-hand sides share the same parameter block

    A      (m, m)  linear part acting on the volatility exponent
    imask  (m,)    1.0 on the quadratic index set, 0.0 elsewhere
    g      (m,)    constant term g(w)
    bV, c0         quadrature integrand c0 + bV . y   (Riccati kind only)
    T              horizon parameter                   (rescaled kind only)
    sign           +1 forward, -1 reversed time        (Riccati kind only)
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numba import njit

RICCATI = 0
COMPACT = 1
QUAD = 2

# termination codes
END = 0
CONVERGED = 1
BLOWN_UP = 2
UNDERFLOW = 3
RADIUS_REACHED = 4
TAIL_REACHED = 5
MAX_STEPS = 6
NONFINITE = 7

STATUS_NAMES = {
    END: "end",
    CONVERGED: "converged",
    BLOWN_UP: "blown_up",
    UNDERFLOW: "underflow",
    RADIUS_REACHED: "radius_reached",
    TAIL_REACHED: "tail_reached",
    MAX_STEPS: "max_steps",
    NONFINITE: "nonfinite",
}

# Dormand-Prince tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@njit(cache=True, nogil=True)
def rhs(kind, z, A, imask, g, bV, c0, T, sign, out):
    m = A.shape[0]
    if kind == RICCATI:
        q = c0
        for i in range(m):
            s = g[i] + 0.5 * imask[i] * z[i] * z[i]
            for k in range(m):
                s += A[i, k] * z[k]
            out[i] = sign * s
            q += bV[i] * z[i]
        out[m] = sign * q
    elif kind == COMPACT:
        e = np.exp(z[m])
        r2 = 1.0 - e
        xf = 0.0
        for i in range(m):
            s = 0.0
            for k in range(m):
                s += A[i, k] * z[k]
            ft = 0.5 * imask[i] * z[i] * z[i] + e * s + e * e * g[i]
            out[i] = ft
            xf += z[i] * ft
        for i in range(m):
            out[i] = (1.0 + r2) * out[i] - 2.0 * xf * z[i]
        out[m] = -2.0 * xf
        out[m + 1] = e * (2.0 - e)
    else:
        xm = z[m]
        for i in range(m):
            s = 0.0
            for k in range(m):
                s += A[i, k] * z[k]
            out[i] = (
                0.5 * T * imask[i] * z[i] * z[i]
                - z[i]
                + T * xm * s
                + T * xm * xm * g[i]
            )
        out[m] = -xm


@njit(cache=True, nogil=True)
def _rms(v, sc):
    s = 0.0
    for i in range(v.size):
        r = v[i] / sc[i]
        s += r * r
    return np.sqrt(s / v.size)


@njit(cache=True, nogil=True)
def _norm(v, n):
    s = 0.0
    for i in range(n):
        s += v[i] * v[i]
    return np.sqrt(s)


@njit(cache=True, nogil=True)
def integrate(
    kind,
    z0,
    t0,
    t_end,
    A,
    imask,
    g,
    bV,
    c0,
    T,
    sign,
    rtol,
    atol,
    h_max,
    conv_tol,
    dwell,
    esc,
    r_stop,
    log_tail,
    max_steps,
    record,
):
    m = A.shape[0]
    nz = z0.size
    z = z0.copy()
    k1 = np.empty(nz)
    k2 = np.empty(nz)
    k3 = np.empty(nz)
    k4 = np.empty(nz)
    k5 = np.empty(nz)
    k6 = np.empty(nz)
    k7 = np.empty(nz)
    tmp = np.empty(nz)
    znew = np.empty(nz)
    sc = np.empty(nz)

    cap = 64 if record else 1
    ts = np.empty(cap)
    zs = np.empty((cap, nz))
    n_rec = 0
    if record:
        ts[0] = t0
        zs[0, :] = z
        n_rec = 1

    rhs(kind, z, A, imask, g, bV, c0, T, sign, k1)
    t = t0
    for i in range(nz):
        sc[i] = atol + rtol * abs(z[i])
    d0 = _rms(z, sc)
    d1 = _rms(k1, sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, h_max, t_end - t0)

    n_acc = 0
    n_rej = 0
    h_min = np.inf
    count = 0
    status = MAX_STEPS
    rejected_last = False

    while n_acc + n_rej < max_steps:
        if h < max(1e-14, 4.0 * 2.220446049250313e-16 * abs(t)):
            status = UNDERFLOW
            break
        if t + h > t_end:
            h = t_end - t

        for i in range(nz):
            tmp[i] = z[i] + h * A21 * k1[i]
        rhs(kind, tmp, A, imask, g, bV, c0, T, sign, k2)
        for i in range(nz):
            tmp[i] = z[i] + h * (A31 * k1[i] + A32 * k2[i])
        rhs(kind, tmp, A, imask, g, bV, c0, T, sign, k3)
        for i in range(nz):
            tmp[i] = z[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        rhs(kind, tmp, A, imask, g, bV, c0, T, sign, k4)
        for i in range(nz):
            tmp[i] = z[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(kind, tmp, A, imask, g, bV, c0, T, sign, k5)
        for i in range(nz):
            tmp[i] = z[i] + h * (
                A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]
            )
        rhs(kind, tmp, A, imask, g, bV, c0, T, sign, k6)
        for i in range(nz):
            znew[i] = z[i] + h * (
                B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]
            )
        rhs(kind, znew, A, imask, g, bV, c0, T, sign, k7)

        finite = True
        for i in range(nz):
            tmp[i] = h * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
            sc[i] = atol + rtol * max(abs(z[i]), abs(znew[i]))
            if not np.isfinite(znew[i]) or not np.isfinite(k7[i]):
                finite = False
        err = _rms(tmp, sc) if finite else np.inf

        if err > 1.0:
            n_rej += 1
            if np.isfinite(err):
                h *= max(0.2, 0.9 * err ** -0.2)
            else:
                h *= 0.2
            rejected_last = True
            continue

        # accepted
        n_acc += 1
        if h < h_min:
            h_min = h
        t = t + h
        dstep = 0.0
        for i in range(m):
            dstep += (znew[i] - z[i]) ** 2
        dstep = np.sqrt(dstep)
        for i in range(nz):
            z[i] = znew[i]
            k1[i] = k7[i]

        if record:
            if n_rec == cap:
                cap2 = cap * 2
                ts2 = np.empty(cap2)
                zs2 = np.empty((cap2, nz))
                ts2[:cap] = ts
                zs2[:cap, :] = zs
                ts = ts2
                zs = zs2
                cap = cap2
            ts[n_rec] = t
            zs[n_rec, :] = z
            n_rec += 1

        stop = False
        if kind == RICCATI or kind == QUAD:
            for i in range(m):
                if imask[i] > 0.0 and z[i] > esc and k1[i] > 0.0:
                    status = BLOWN_UP
                    stop = True
                    break
            if stop:
                break
        if kind == RICCATI and r_stop > 0.0:
            if _norm(z, m) <= r_stop:
                status = RADIUS_REACHED
                break
        if kind == COMPACT and z[m] < log_tail:
            status = TAIL_REACHED
            break

        if conv_tol > 0.0:
            if kind == QUAD:
                fn = _norm(k1, m + 1)
            else:
                fn = _norm(k1, m)
            ok = fn < conv_tol and dstep < conv_tol
            if kind == COMPACT:
                # the sphere itself is not an interior limit
                ok = ok and z[m] > -13.0
            if ok:
                count += 1
            else:
                count = 0
            if count >= dwell:
                status = CONVERGED
                break

        if t >= t_end:
            status = END
            break

        if err == 0.0:
            fac = 10.0
        else:
            fac = min(10.0, max(0.2, 0.9 * err ** -0.2))
        if rejected_last:
            fac = min(fac, 1.0)
        rejected_last = False
        h = min(h * fac, h_max)

    if not np.all(np.isfinite(z)):
        status = NONFINITE
    return status, t, z, n_acc, n_rej, h_min, ts[:n_rec].copy(), zs[:n_rec].copy()


class KernelResult(NamedTuple):
    status: int
    t: float
    z: np.ndarray
    n_accepted: int
    n_rejected: int
    h_min: float
    ts: np.ndarray
    zs: np.ndarray

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]


def run(
    kind: int,
    z0,
    A,
    imask,
    g,
    *,
    t0: float = 0.0,
    t_end: float = np.inf,
    bV=None,
    c0: float = 0.0,
    T: float = 1.0,
    sign: float = 1.0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    h_max: float = 1.0,
    conv_tol: float = 0.0,
    dwell: int = 10,
    esc: float = np.inf,
    r_stop: float = 0.0,
    tail_eps: float = 1e-10,
    max_steps: int = 2_000_000,
    record: bool = False,
) -> KernelResult:
    A = np.ascontiguousarray(A, dtype=np.float64)
    m = A.shape[0]
    if bV is None:
        bV = np.zeros(m)
    out = integrate(
        int(kind),
        np.ascontiguousarray(z0, dtype=np.float64),
        float(t0),
        float(t_end),
        A,
        np.ascontiguousarray(imask, dtype=np.float64),
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(bV, dtype=np.float64),
        float(c0),
        float(T),
        float(sign),
        float(rtol),
        float(atol),
        float(h_max),
        float(conv_tol),
        int(dwell),
        float(esc),
        float(r_stop),
        float(np.log(tail_eps)),
        int(max_steps),
        bool(record),
    )
    return KernelResult(*out)


def evaluate_rhs(kind, z, A, imask, g, *, bV=None, c0=0.0, T=1.0, sign=1.0) -> np.ndarray:
    A = np.ascontiguousarray(A, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    if bV is None:
        bV = np.zeros(A.shape[0])
    out = np.empty_like(z)
    rhs(
        int(kind),
        z,
        A,
        np.ascontiguousarray(imask, dtype=np.float64),
        np.ascontiguousarray(g, dtype=np.float64),
        np.ascontiguousarray(bV, dtype=np.float64),
        float(c0),
        float(T),
        float(sign),
        out,
    )
    return out


@njit(cache=True, nogil=True)
def euler_step(X, Z, b, A, idx, pi, dt, sq, has_D):
    """One full-truncation Euler step for the canonical state, in place.

    ``Z`` holds ``len(idx)`` volatility shocks followed by ``n`` dependent
    shocks per path. The dependent covariance ``pi_0 + sum x_i^+ pi_i`` is
    factored by a pivot-clipped Cholesky, which tolerates singular blocks.
    """
    N, d = X.shape
    m = pi.shape[0] - 1
    n = d - m
    k = idx.size
    dx = np.empty(d)
    cov = np.empty((n, n))
    L = np.zeros((n, n))
    for p in range(N):
        for j in range(d):
            s = b[j]
            for i in range(d):
                s += X[p, i] * A[i, j]
            dx[j] = s * dt
        for a in range(k):
            i = idx[a]
            xi = X[p, i]
            if xi > 0.0:
                dx[i] += np.sqrt(xi) * Z[p, a] * sq
        if has_D:
            for r in range(n):
                for c in range(n):
                    s = pi[0, r, c]
                    for i in range(m):
                        xi = X[p, i]
                        if xi > 0.0:
                            s += xi * pi[i + 1, r, c]
                    cov[r, c] = s
            for r in range(n):
                for c in range(r + 1):
                    s = cov[r, c]
                    for q in range(c):
                        s -= L[r, q] * L[c, q]
                    if r == c:
                        L[r, r] = np.sqrt(s) if s > 0.0 else 0.0
                    else:
                        L[r, c] = s / L[c, c] if L[c, c] > 0.0 else 0.0
            for r in range(n):
                s = 0.0
                for c in range(r + 1):
                    s += L[r, c] * Z[p, k + c]
                dx[m + r] += s * sq
        for j in range(d):
            X[p, j] += dx[j]
