"""Closed-form epsilon-near-zero analysis in the vanishing-corrector case.

With averaged per-axis material data (eps_bar, sigma_bar_d, lambda_bar_d)
the effective permittivity along a principal axis factorizes as

    eps_eff / eps_bar = (1 - xi0/d) * (1 + lambda_bar_d/(i w eps_bar xi0 d)),

where the generalized plasmonic thickness

    xi0 = s/2 + sqrt((s/2)^2 + l),   s = sigma_bar_d/(i w eps_bar),
                                     l = lambda_bar_d/(i w eps_bar),

is a root of xi^2 - s xi - l = 0.  The factorized form is identical to the
direct three-term average 1 - s/d - l/d^2 and vanishes at the critical
spacing d_c = xi0.  The square root is the principal branch; the
realizability flag records whether that branch yields a physical spacing
(positive real part, small relative imaginary part).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

from .errors import InvalidParameterError, PreconditionError
from .materials import complex_to_pair

LOSS_THRESHOLD_DEFAULT = 0.1   # |Im d_c| / |d_c| below which d_c counts as realizable
REGIME_CONTRAST = 100.0        # dominance factor separating the two limits


@dataclass(frozen=True)
class EnzParams:
    """Per-axis averaged quantities entering the closed forms.

    All in tilde units; eps_bar must have positive real part, spacing and
    frequency must be positive.
    """

    eps_bar: complex
    sigma_bar_d: complex
    lambda_bar_d: complex
    omega: float
    spacing: float = 1.0

    def __post_init__(self):
        if complex(self.eps_bar).real <= 0.0:
            raise InvalidParameterError(
                f"Re(eps_bar) must be positive, got {self.eps_bar}")
        if self.omega <= 0.0:
            raise InvalidParameterError(f"omega must be positive, got {self.omega}")
        if self.spacing <= 0.0:
            raise InvalidParameterError(f"spacing must be positive, got {self.spacing}")

    @property
    def s_term(self) -> complex:
        """sigma_bar_d / (i omega eps_bar)."""
        return self.sigma_bar_d / (1j * self.omega * self.eps_bar)

    @property
    def l_term(self) -> complex:
        """lambda_bar_d / (i omega eps_bar)."""
        return self.lambda_bar_d / (1j * self.omega * self.eps_bar)


@dataclass(frozen=True)
class EnzReport:
    xi0: complex
    critical_spacing: complex
    realizable: bool
    regime: str
    eps_eff_ratio: complex

    def to_json_dict(self) -> dict:
        return {
            "xi0": complex_to_pair(self.xi0),
            "d_c": complex_to_pair(self.critical_spacing),
            "realizable": self.realizable,
            "regime": self.regime,
            "eps_eff_ratio": complex_to_pair(self.eps_eff_ratio),
        }


def plasmonic_thickness(p: EnzParams) -> complex:
    """Generalized plasmonic thickness xi0 (principal square root)."""
    half = 0.5 * p.s_term
    return half + cmath.sqrt(half * half + p.l_term)


def quadratic_residual(p: EnzParams, xi0: complex) -> float:
    """|xi0^2 - s xi0 - l| / (1 + |xi0|^2); zero iff xi0 is a root."""
    r = xi0 * xi0 - p.s_term * xi0 - p.l_term
    return abs(r) / (1.0 + abs(xi0) ** 2)


def eff_permittivity_factorized(p: EnzParams) -> complex:
    """Factorized eps_eff_i / eps_bar_i; equals the direct average exactly."""
    xi0 = plasmonic_thickness(p)
    if xi0 == 0.0:
        raise PreconditionError(
            "xi0 = 0 (both conductivities vanish); use the direct average")
    d = p.spacing
    return (1.0 - xi0 / d) * (1.0 + p.l_term / (xi0 * d))


def eff_permittivity_direct(p: EnzParams) -> complex:
    """Direct three-term average eps_eff_i / eps_bar_i = 1 - s/d - l/d^2."""
    d = p.spacing
    return 1.0 - p.s_term / d - p.l_term / (d * d)


def classify_regime(p: EnzParams, contrast: float = REGIME_CONTRAST) -> str:
    """sigma_dominant / lambda_dominant / mixed by comparing the two terms
    under the square root of the plasmonic thickness."""
    s2 = abs(0.5 * p.s_term) ** 2
    l = abs(p.l_term)
    if l == 0.0 and s2 == 0.0:
        return "mixed"
    if l == 0.0 or s2 >= contrast * l:
        return "sigma_dominant"
    if s2 == 0.0 or l >= contrast * s2:
        return "lambda_dominant"
    return "mixed"


def critical_spacing(p: EnzParams,
                     loss_threshold: float = LOSS_THRESHOLD_DEFAULT) -> tuple[complex, bool]:
    """Critical spacing d_c = xi0 with a realizability flag.

    Realizable means the principal-branch root has positive real part and
    relative imaginary part below `loss_threshold` (a near-lossless spacing a
    fabricator could actually choose).
    """
    d_c = plasmonic_thickness(p)
    if d_c == 0.0:
        return d_c, False
    realizable = d_c.real > 0.0 and abs(d_c.imag) / abs(d_c) < loss_threshold
    return d_c, realizable


def analyze(p: EnzParams, loss_threshold: float = LOSS_THRESHOLD_DEFAULT) -> EnzReport:
    """Full closed-form ENZ report for one principal axis."""
    xi0 = plasmonic_thickness(p)
    d_c, realizable = critical_spacing(p, loss_threshold)
    if xi0 == 0.0:
        ratio = eff_permittivity_direct(p)
    else:
        ratio = eff_permittivity_factorized(p)
    return EnzReport(xi0=xi0, critical_spacing=d_c, realizable=realizable,
                     regime=classify_regime(p), eps_eff_ratio=ratio)
