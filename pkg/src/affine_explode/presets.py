"""Ready-made models: Heston, double stochastic volatility and cascading
volatility.

Each preset is built from its raw SDE parameters and canonicalized with
:func:`~affine_explode.model.to_canonical`, so the presets also exercise the
canonical transform.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .model import AffineModelSpec, CanonicalModel, EquityMapping, to_canonical


@dataclass(frozen=True, eq=False)
class Preset:
    """A model together with its log-price exponent and initial state.

    ``equity`` is ``None`` for models without a traded asset.
    """

    name: str
    spec: AffineModelSpec
    model: CanonicalModel
    equity: EquityMapping | None
    params: dict[str, Any] = field(default_factory=dict)


def heston(
    kappa: float = 1.0,
    sigma: float = 0.4,
    rho: float = -0.2,
    phi: float = 0.09,
    V0: float = 0.09,
    S0: float = 1.0,
) -> Preset:
    """Heston model for ``Y = (V, log S)``.

    The canonical state is ``X = (V / sigma^2, -rho V / sigma + log S)`` and
    ``log S = theta . X`` with ``theta = (rho sigma, 1)``.
    """
    b = np.array([kappa * phi, 0.0])
    B = np.array([[-kappa, 0.0], [-0.5, 0.0]])
    a = np.zeros((2, 2))
    alpha = np.zeros((2, 2, 2))
    alpha[0] = [[sigma**2, sigma * rho], [sigma * rho, 1.0]]
    spec = AffineModelSpec(1, 1, b, B, a, alpha)
    model = to_canonical(spec)
    theta = model.exponent_from_original([0.0, 1.0])
    X0 = model.state_from_original([V0, np.log(S0)])
    params = dict(kappa=kappa, sigma=sigma, rho=rho, phi=phi, V0=V0, S0=S0)
    return Preset("heston", spec, model, EquityMapping(theta, X0), params)


def double_vol(
    kappa1: float = 2.0,
    kappa2: float = 1.0,
    rho: float = -0.2,
    phi: float = 0.04,
    V0: float | None = None,
    V0p: float | None = None,
    S0: float = 1.0,
) -> Preset:
    """Double mean-reverting variance model for ``Y = (V, V', log S)``.

    ``V`` reverts to ``V'`` at speed ``kappa1`` and ``V'`` reverts to ``phi``
    at speed ``kappa2``; the price is correlated with ``V`` only.
    """
    V0 = phi if V0 is None else V0
    V0p = phi if V0p is None else V0p
    b = np.array([0.0, kappa2 * phi, 0.0])
    B = np.array(
        [
            [-kappa1, kappa1, 0.0],
            [0.0, -kappa2, 0.0],
            [-0.5, 0.0, 0.0],
        ]
    )
    a = np.zeros((3, 3))
    alpha = np.zeros((3, 3, 3))
    alpha[0] = [[1.0, 0.0, rho], [0.0, 0.0, 0.0], [rho, 0.0, 1.0]]
    alpha[1, 1, 1] = 1.0
    spec = AffineModelSpec(2, 1, b, B, a, alpha)
    model = to_canonical(spec)
    theta = model.exponent_from_original([0.0, 0.0, 1.0])
    X0 = model.state_from_original([V0, V0p, np.log(S0)])
    params = dict(kappa1=kappa1, kappa2=kappa2, rho=rho, phi=phi, V0=V0, V0p=V0p, S0=S0)
    return Preset("double_vol", spec, model, EquityMapping(theta, X0), params)


def cascading(
    m: int = 3,
    kappa: float = 1.0,
    delta: float = 0.5,
    sigma: float = 0.4,
    phi: float = 0.09,
    equity: bool = False,
    V0: float | None = None,
    S0: float = 1.0,
) -> Preset:
    """Cascading volatility model with ``m`` square-root factors.

    Factor ``i`` reverts to factor ``i + 1`` at speed ``kappa delta^(i-1)``
    and the last one reverts to ``phi``. With ``equity=False`` one
    independent Ornstein-Uhlenbeck factor is appended (invertible ``A_D``);
    with ``equity=True`` a log-price driven by the first factor is appended
    instead.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    V0 = phi if V0 is None else V0
    d = m + 1
    speeds = kappa * delta ** np.arange(m)
    b = np.zeros(d)
    b[m - 1] = speeds[-1] * phi
    B = np.zeros((d, d))
    for i in range(m):
        B[i, i] = -speeds[i]
        if i + 1 < m:
            B[i, i + 1] = speeds[i]
    a = np.zeros((d, d))
    alpha = np.zeros((d, d, d))
    for i in range(m):
        alpha[i, i, i] = sigma**2
    if equity:
        B[m, 0] = -0.5
        alpha[0, m, m] = 1.0
    else:
        B[m, m] = -1.0
        a[m, m] = 1.0
    spec = AffineModelSpec(m, 1, b, B, a, alpha)
    model = to_canonical(spec)
    Y0 = np.concatenate([np.full(m, V0), [np.log(S0) if equity else 0.0]])
    X0 = model.state_from_original(Y0)
    eq = None
    if equity:
        theta = model.exponent_from_original(np.eye(d)[m])
        eq = EquityMapping(theta, X0)
    params = dict(m=m, kappa=kappa, delta=delta, sigma=sigma, phi=phi, equity=equity, V0=V0, S0=S0)
    return Preset("cascading", spec, model, eq, params)


PRESETS: dict[str, Callable[..., Preset]] = {
    "heston": heston,
    "double_vol": double_vol,
    "cascading": cascading,
}


def get_preset(name: str, **params: Any) -> Preset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)
