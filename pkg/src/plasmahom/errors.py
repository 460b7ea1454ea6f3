"""Exception hierarchy shared by all plasmahom modules."""


class PlasmahomError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(PlasmahomError):
    """A physical or numerical parameter is outside its admissible domain."""


class GeometryError(PlasmahomError):
    """Requested unit-cell geometry is malformed or leaves the cell."""


class DomainError(PlasmahomError):
    """A query point lies outside the domain of the requested operation."""


class MeshError(PlasmahomError):
    """Mesh generation failed or a generated mesh violates its contract."""


class UnsupportedDirectionError(PlasmahomError):
    """Cell solves are two-dimensional; the axis-invariant direction is
    handled in closed form and rejected here."""


class AssemblyContractError(PlasmahomError):
    """An assembled system violates an assembly-time guarantee."""


class SolverError(PlasmahomError):
    """A linear or nonlinear solve failed to reach its tolerance."""


class PreconditionError(PlasmahomError):
    """A closed-form path was invoked outside its validity conditions."""


class FitError(PlasmahomError):
    """Nonlinear resonance fit did not converge."""


class RangeGuardError(PlasmahomError):
    """Input data does not cover a wide enough frequency window for the
    requested consistency check to be meaningful."""


class ConfigError(PlasmahomError):
    """Run configuration failed validation."""
