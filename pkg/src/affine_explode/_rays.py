"""Ray bisection shared by the boundary tracers."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Literal, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

RAY_CAP = 2.0**30

Flag = Literal["ok", "unbounded"]


def n_workers(requested: int | None = None) -> int:
    """Thread count, capped by ``AFFINE_EXPLODE_THREADS`` when set."""
    cpu = os.cpu_count() or 1
    n = cpu if requested is None else max(1, int(requested))
    env = os.environ.get("AFFINE_EXPLODE_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    items = list(items)
    n = min(n_workers(workers), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def ray_directions(m: int, count: int) -> np.ndarray:
    """Unit directions: ``+-e1`` for ``m = 1``, equally spaced angles for
    ``m = 2`` and a Fibonacci lattice otherwise."""
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    # spread points over the sphere in the first three coordinates
    i = np.arange(count) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / count)
    th = np.pi * (1.0 + 5.0**0.5) * i
    dirs = np.zeros((count, m))
    dirs[:, 0] = np.cos(th) * np.sin(phi)
    dirs[:, 1] = np.sin(th) * np.sin(phi)
    dirs[:, 2] = np.cos(phi)
    return dirs


def bisect_ray(
    inside: Callable[[float], bool],
    tol: float = 1e-6,
    cap: float = RAY_CAP,
    start: float = 1.0,
) -> tuple[float, Flag]:
    """Boundary radius of a convex set along a ray from an interior point.

    Expands geometrically by 2 from ``start`` until ``inside`` fails, then
    bisects to width ``tol``. Returns ``(inf, "unbounded")`` past ``cap``.
    """
    lo, hi = 0.0, start
    while inside(hi):
        lo = hi
        if hi >= cap:
            return np.inf, "unbounded"
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), "ok"
