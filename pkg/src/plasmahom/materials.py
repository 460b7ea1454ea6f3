"""Material models for plasmonic unit cells.

Everything downstream of this module works in nondimensional "tilde" units:
the unit cell is [0,1]^2 (cross-section of [0,1]^3), eps0 = mu0 = 1, and the
frequency, Fermi level and sheet spacing are expressed through the rescalings

    omega = omega_tilde * 1e14 Hz,
    E_F   = ef_tilde    * 1e-19 J,
    d     = d_tilde     * 10 nm.

Physical-unit conversions live only here.  The surface conductivity of doped
graphene follows the Drude model; after rescaling, the surface admittance
that multiplies all interface terms is

    eta = 82.9 * ef_tilde / (d_tilde * omega_tilde * (omega_tilde + 0.02i)).

Note on the prefactor: recomputing e^2 * 1e-19 / (eps0 * pi * hbar^2 * 1e14 *
1e14 * 1e-8) from CODATA constants gives 82.979..., while the canonical
value used throughout this package is the rounded 82.9.  The two differ by
about 0.1%; `drude_prefactor_from_constants` exposes the recomputed value so
the discrepancy stays visible, but every quantitative result here uses 82.9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidParameterError

# Unit scales of the nondimensionalization.
OMEGA_UNIT = 1.0e14        # Hz per unit of omega_tilde
FERMI_UNIT = 1.0e-19       # J per unit of ef_tilde
SPACING_UNIT = 1.0e-8      # m per unit of d_tilde (10 nm)
DEFAULT_RELAX_TIME = 0.5e-12   # s

# Rounded rescaled Drude prefactor; see module docstring.
DRUDE_PREFACTOR = 82.9

# Parameter window of the quantitative studies this package reproduces.
EF_TILDE_RANGE = (0.0, 1.6)
OMEGA_TILDE_RANGE = (0.5, 4.0)

_E_CHARGE = 1.602176634e-19    # C
_HBAR = 1.054571817e-34        # J s
_EPS0 = 8.8541878128e-12       # F / m


def drude_prefactor_from_constants() -> float:
    """Rescaled Drude prefactor recomputed from physical constants.

    Returns ~82.95, slightly above the canonical 82.9 used everywhere else.
    """
    return (_E_CHARGE**2 * FERMI_UNIT
            / (_EPS0 * math.pi * _HBAR**2 * OMEGA_UNIT**2 * SPACING_UNIT))


@dataclass(frozen=True)
class DrudeParams:
    """Nondimensional Drude parameters of a doped-graphene sheet.

    ``relax_time`` is in seconds.  Values outside the study ranges are
    accepted; ``in_study_range`` reports whether all of them lie inside.
    """

    fermi_energy_tilde: float
    omega_tilde: float
    spacing_tilde: float
    relax_time: float = DEFAULT_RELAX_TIME

    def __post_init__(self):
        if self.relax_time <= 0.0:
            raise InvalidParameterError(
                f"relax_time must be positive, got {self.relax_time}")
        if self.spacing_tilde <= 0.0:
            raise InvalidParameterError(
                f"spacing_tilde must be positive, got {self.spacing_tilde}")
        if self.fermi_energy_tilde < 0.0:
            raise InvalidParameterError(
                f"fermi_energy_tilde must be >= 0, got {self.fermi_energy_tilde}")

    @property
    def in_study_range(self) -> bool:
        lo_e, hi_e = EF_TILDE_RANGE
        lo_w, hi_w = OMEGA_TILDE_RANGE
        return (lo_e <= self.fermi_energy_tilde <= hi_e
                and lo_w <= self.omega_tilde <= hi_w
                and self.spacing_tilde > 0.0)

    @property
    def loss_rate_tilde(self) -> float:
        """1/(tau * OMEGA_UNIT); equals 0.02 for the default relaxation time."""
        return 1.0 / (self.relax_time * OMEGA_UNIT)


def drude_surface_conductivity(p: DrudeParams) -> complex:
    """Physical surface conductivity sigma^d of a Drude sheet.

    Returned in units of eps0 * m / s, the combination the
    nondimensionalization folds away, so that
    ``sigma_d == 1j * omega * d * eta`` with physical omega and d and
    ``eta`` from `rescaled_eta` (exact for the default relaxation time).

    Zero doping returns exactly zero; the lossless limit tau -> inf gives a
    purely imaginary (inductive) value.
    """
    if p.omega_tilde <= 0.0:
        raise InvalidParameterError(
            f"omega_tilde must be positive, got {p.omega_tilde}")
    if p.fermi_energy_tilde == 0.0:
        return 0.0 + 0.0j
    gamma = p.loss_rate_tilde
    # i * omega * d * eta with eta evaluated at this loss rate
    return (1j * OMEGA_UNIT * SPACING_UNIT * DRUDE_PREFACTOR
            * p.fermi_energy_tilde / (p.omega_tilde + 1j * gamma))


def rescaled_eta(fermi_energy_tilde: float, spacing_tilde: float,
                 omega_tilde: float) -> complex:
    """Nondimensional surface admittance eta = sigma/(i omega).

    eta = 82.9 * ef / (d * w * (w + 0.02i)).  Real part positive and
    imaginary part negative for positive doping; homogeneous of degree -1
    in the spacing.
    """
    if spacing_tilde == 0.0:
        raise InvalidParameterError("spacing_tilde must be nonzero")
    if omega_tilde == 0.0:
        raise InvalidParameterError("omega_tilde must be nonzero")
    return (DRUDE_PREFACTOR * fermi_energy_tilde
            / (spacing_tilde * omega_tilde * (omega_tilde + 0.02j)))


def scale_conductivities(d: float, sigma: complex, lam: complex) -> tuple[complex, complex]:
    """Map cell-level (sigma, lambda) to physical (sigma_d, lambda_d).

    sigma_d = d * sigma and lambda_d = d^2 * lambda; `unscale_conductivities`
    inverts the map exactly.
    """
    if d <= 0.0:
        raise InvalidParameterError(f"spacing d must be positive, got {d}")
    return d * sigma, d * d * lam


def unscale_conductivities(d: float, sigma_d: complex, lambda_d: complex) -> tuple[complex, complex]:
    """Inverse of `scale_conductivities`."""
    if d <= 0.0:
        raise InvalidParameterError(f"spacing d must be positive, got {d}")
    return sigma_d / d, lambda_d / (d * d)


@dataclass(frozen=True)
class MaterialSpec:
    """Cell-level material data for one unit-cell solve.

    ``eps_bulk`` is the (complex) bulk permittivity, constant over the cell.
    ``sigma_surface`` is the cell-level surface conductivity, one complex
    value per interface component (a scalar applies to all components); it
    acts tangentially on the sheet.  ``lambda_line`` is the cell-level line
    conductivity carried by sheet edges, acting along the edge direction.

    ``lambda_matches_sigma_flux`` declares that the line conductivity varies
    along the invariant axis so that its divergence balances the in-sheet
    conductivity flux at the edges (the edge compatibility identity); with a
    constant lambda this only holds when sigma vanishes at the edges.
    """

    eps_bulk: complex = 1.0 + 0.0j
    sigma_surface: complex | tuple[complex, ...] = 0.0j
    lambda_line: complex = 0.0j
    mu0: float = 1.0
    lambda_matches_sigma_flux: bool = False
    drude: DrudeParams | None = field(default=None, compare=False)

    def __post_init__(self):
        eps = complex(self.eps_bulk)
        if eps.real <= 0.0:
            raise InvalidParameterError(
                f"Re(eps_bulk) must be positive, got {eps}")
        if eps.imag < 0.0:
            raise InvalidParameterError(
                f"Im(eps_bulk) must be nonnegative, got {eps}")

    def sigma_for_component(self, k: int) -> complex:
        if isinstance(self.sigma_surface, tuple):
            return complex(self.sigma_surface[k])
        return complex(self.sigma_surface)

    def n_sigma_components(self) -> int:
        return len(self.sigma_surface) if isinstance(self.sigma_surface, tuple) else 1

    def eta_surface(self, omega_tilde: float, k: int = 0) -> complex:
        """Surface admittance eta = sigma/(i omega) of interface component k."""
        if omega_tilde == 0.0:
            raise InvalidParameterError("omega_tilde must be nonzero")
        return self.sigma_for_component(k) / (1j * omega_tilde)

    def eta_line(self, omega_tilde: float) -> complex:
        """Line admittance lambda/(i omega)."""
        if omega_tilde == 0.0:
            raise InvalidParameterError("omega_tilde must be nonzero")
        return complex(self.lambda_line) / (1j * omega_tilde)


def material_from_drude(ef_tilde: float, spacing_tilde: float, omega_tilde: float,
                        relax_time: float = DEFAULT_RELAX_TIME,
                        eps_bulk: complex = 1.0 + 0.0j,
                        lambda_line: complex = 0.0j) -> MaterialSpec:
    """MaterialSpec whose surface admittance equals the Drude eta.

    The cell-level sigma is chosen so that sigma/(i omega_tilde) reproduces
    the rescaled admittance at the given frequency and spacing.
    """
    p = DrudeParams(ef_tilde, omega_tilde, spacing_tilde, relax_time)
    gamma = p.loss_rate_tilde
    eta = (DRUDE_PREFACTOR * ef_tilde
           / (spacing_tilde * omega_tilde * (omega_tilde + 1j * gamma)))
    return MaterialSpec(eps_bulk=eps_bulk,
                        sigma_surface=1j * omega_tilde * eta,
                        lambda_line=lambda_line,
                        drude=p)


def material_builder_from_config(block: dict):
    """Turn a JSON material block into a callable omega_tilde -> MaterialSpec.

    Recognized keys: ``eps_bulk`` (number or [re, im]), ``sigma_surface``
    ([re, im] or number), ``lambda_line``, ``lambda_matches_sigma_flux``
    (bool) and ``drude`` with sub-keys ``E_F_tilde``, ``d_tilde``,
    ``tau_ps`` (optional; default 0.5).  A ``drude`` block overrides
    ``sigma_surface`` frequency point by frequency point.
    """
    eps = _parse_complex(block.get("eps_bulk", 1.0))
    lam = _parse_complex(block.get("lambda_line", 0.0))
    lam_flux = bool(block.get("lambda_matches_sigma_flux", False))
    drude = block.get("drude")
    if drude is not None:
        ef = float(drude["E_F_tilde"])
        d = float(drude["d_tilde"])
        tau = float(drude.get("tau_ps", DEFAULT_RELAX_TIME * 1e12)) * 1e-12

        def build(omega_tilde: float) -> MaterialSpec:
            m = material_from_drude(ef, d, omega_tilde, relax_time=tau,
                                    eps_bulk=eps, lambda_line=lam)
            if lam_flux:
                m = MaterialSpec(eps_bulk=m.eps_bulk, sigma_surface=m.sigma_surface,
                                 lambda_line=m.lambda_line,
                                 lambda_matches_sigma_flux=True, drude=m.drude)
            return m

        return build

    sigma = _parse_complex(block.get("sigma_surface", 0.0))

    def build_const(omega_tilde: float) -> MaterialSpec:
        return MaterialSpec(eps_bulk=eps, sigma_surface=sigma, lambda_line=lam,
                            lambda_matches_sigma_flux=lam_flux)

    return build_const


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise InvalidParameterError(f"complex value must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, complex):
        return v
    raise InvalidParameterError(f"cannot interpret {v!r} as a complex number")


def complex_to_pair(z: complex) -> list[float]:
    """[re, im] encoding used by all JSON artifacts."""
    z = complex(z)
    return [z.real, z.imag]
