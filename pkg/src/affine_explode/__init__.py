"""Moment explosions and long-term behavior of affine diffusions."""
from __future__ import annotations

__version__ = "0.1.0"

from .blowup import (
    CriticalExponents,
    ExplosionReport,
    blow_up_time,
    blowup_rate,
    compactify,
    critical_exponents,
    decompactify,
    in_S_T,
    quad_equilibria,
    quad_jacobian,
    quad_rhs,
    trace_ST_boundary,
)
from .equilibrium import (
    DMembership,
    Equilibrium,
    Kind,
    classify,
    enumerate_equilibria,
    eta,
    eta_derivative,
    fD_membership,
)
from .errors import *  # noqa: F401,F403
from .io import load_model, model_from_dict, model_to_dict, read_csv, write_csv
from .longterm import (
    BoundarySection,
    RegionVerdict,
    growth_rate,
    in_S_infinity,
    interior_growth_rate,
    stock_growth_rate,
    trace_Sinf_boundary,
)
from .model import (
    AffineModelSpec,
    CanonicalModel,
    EquityMapping,
    MartingaleVerdict,
    ValidationReport,
    Violation,
    canonical_from_blocks,
    check_martingale,
    check_martingale_spec,
    is_nonsingular_m_matrix,
    kernel_AD,
    to_canonical,
    validate_admissible,
)
from .oracle import MCEstimate, ScalarRiccatiSolution, manifold_shoot, mc_exponential_moment, scalar_closed_form
from .presets import PRESETS, Preset, cascading, double_vol, get_preset, heston
from .riccati import (
    BlownUp,
    Converged,
    HorizonReached,
    TransformValue,
    Trajectory,
    integrate_ricV,
    jacobian,
    rhs_f,
    riccati_solution,
    transform_value,
)
from .smile import (
    RateFunction,
    SmileAsymptotics,
    atm_expansion,
    lee_slope,
    legendre,
    legendre_argmax,
    rate_function,
    sigma_infinity,
    smile_at_T,
    solve_p0,
)
