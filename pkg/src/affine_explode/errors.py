"""Exception types raised across the package."""
from __future__ import annotations


class AffineExplodeError(Exception):
    """Base class for all package errors."""


class ConfigError(AffineExplodeError):
    """Malformed model or run configuration."""


class DimensionMismatch(ConfigError):
    """Parameter blocks disagree with the declared dimensions."""


class NotCanonicalizable(AffineExplodeError):
    """The specification cannot be brought to canonical form with a diagonal
    volatility transform."""


class DomainError(AffineExplodeError):
    """A requested quantity does not exist for the given input."""


class KernelViolation(DomainError):
    """The dependent exponent does not lie in the kernel of ``A_D``."""


class StepSizeUnderflow(DomainError):
    """The adaptive integrator could not make progress."""


class ExplodesBeforeT(DomainError):
    """The exponential moment is infinite at the requested horizon."""


class MomentExplodes(DomainError):
    """The exponent lies outside the long-term region, so no growth rate."""


class NotAnEquilibrium(DomainError):
    """The supplied point is not a root of the Riccati vector field."""


class TailNotContracting(DomainError):
    """The compactified trajectory approached the sphere without a positive
    radial contraction rate."""


class NotOnBoundary(DomainError):
    """The exponent is not on the boundary of the finite-horizon region."""


class OutsideEffectiveDomain(DomainError):
    """The abscissa lies outside the observed slope range of the rate
    function."""


class NegativeExponent(DomainError):
    """Lee's slope function is only defined for nonnegative exponents."""


class NotType1(DomainError):
    """The manifold tracer needs a hyperbolic equilibrium with exactly one
    positive eigenvalue."""


class Underresolved(DomainError):
    """Monte Carlo relative standard error is above 10%."""


class NotStable(DomainError):
    """The martingale exponent is not a stable equilibrium, so the
    large-maturity smile formula does not apply."""


class AdmissibilityError(ConfigError):
    """Parameters violate admissibility; ``report`` lists each violation."""

    def __init__(self, report):
        self.report = report
        super().__init__("\n".join(report.lines()))


class NotInD(DomainError):
    """The Riccati vector field has no equilibrium for this ``w``."""
