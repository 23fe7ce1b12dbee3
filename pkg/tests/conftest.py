from __future__ import annotations

import numpy as np
import pytest

from affine_explode import CanonicalModel, blow_up_time, fD_membership, heston

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_model(rng: np.random.Generator, m: int | None = None, n: int | None = None) -> CanonicalModel:
    """Random admissible canonical model with ``A_D = 0`` so every ``w`` is
    in the kernel."""
    m = int(rng.integers(1, 4)) if m is None else m
    n = int(rng.integers(0, 3)) if n is None else n
    A_V = np.tril(rng.uniform(0.0, 0.5, (m, m)), -1)
    A_V[np.diag_indices(m)] = -rng.uniform(0.3, 2.0, m)
    A_C = rng.uniform(-0.5, 0.5, (m, n))
    pi = np.zeros((m + 1, n, n))
    for i in range(m + 1):
        G = rng.normal(size=(n, n)) * 0.4
        pi[i] = G @ G.T
    b = np.concatenate([rng.uniform(0.0, 1.0, m), rng.normal(0.0, 0.3, n)])
    idx = tuple(int(i) for i in np.flatnonzero(rng.random(m) < 0.7))
    if not idx:
        idx = (int(rng.integers(m)),)
    return CanonicalModel(m, n, idx, A_V, A_C, np.zeros((n, n)), b, pi)


def random_w_in_D(model: CanonicalModel, rng: np.random.Generator) -> np.ndarray:
    """Normal draw halved until it lies in the interior of the domain of ``eta``."""
    w = rng.normal(0.0, 1.0, model.n)
    while fD_membership(model, w).verdict != "interior":
        w = 0.5 * w
    return w


@pytest.fixture(scope="session")
def jit_warm():
    """Compile the integrator once so timed sections measure steady state."""
    p = heston()
    blow_up_time(p.model, [3.0, 0.5])
    return True


@pytest.fixture(scope="session")
def hest():
    return heston()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
