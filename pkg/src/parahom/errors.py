"""Exception types raised across the package."""


class ParahomError(Exception):
    """Base class for all package errors."""


class DegenerateLatticeError(ParahomError):
    """Lattice basis is (numerically) singular."""


class EllipticityError(ParahomError):
    """Differential symbol violates the rank/ellipticity condition."""


class SolverError(ParahomError):
    """A linear solve did not reach the required residual."""


class MeshError(ParahomError):
    """Mesh spacing incompatible with the domain."""


class ResolutionError(ParahomError):
    """Mesh too coarse for the requested oscillation scale."""


class ExtensionMarginError(ParahomError):
    """Requested extension margin exceeds what reflection supports."""


class NearSingularError(ParahomError):
    """Resolvent shift too close to the discrete spectrum."""


class KernelSpaceError(ParahomError):
    """Operator kernel is not of the supported (constants) form."""


class MissingNodeError(ParahomError):
    """Trajectory does not contain the requested time node."""


class RateDomainError(ParahomError):
    """Rate profile evaluated outside its parameter range."""


class FitError(ParahomError):
    """Not enough usable samples for a rate fit."""


class ConfigError(ParahomError):
    """Invalid experiment configuration."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class BudgetError(ParahomError):
    """Requested run exceeds the configured node budget."""
