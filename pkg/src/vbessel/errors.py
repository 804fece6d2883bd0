"""Exception types shared across the package.

Each class maps to one failure category surfaced by the CLI; the exit-code
table lives in :mod:`vbessel.cli`.
"""


class VBesselError(Exception):
    """Base class for all package-specific failures."""


class DomainError(VBesselError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(VBesselError, ValueError):
    """A structural parameter (order, exponent, grid size) is invalid."""


class OverflowDomainError(VBesselError, OverflowError):
    """A requested unscaled value exceeds float range; a scaled variant exists."""


class ConvergenceError(VBesselError, RuntimeError):
    """An iterative computation failed to converge within its budget."""


class GrowthError(VBesselError, ValueError):
    """Initial or source data grow too fast for the quadrature truncation."""


class SampleSizeError(VBesselError, ValueError):
    """Too few samples to evaluate the requested statistic."""


class StepSizeError(VBesselError, ValueError):
    """A time step violates the stability rule of the simulation scheme."""


class CatalogError(VBesselError, KeyError):
    """An unknown name was requested from a registry."""


class ConfigError(VBesselError, ValueError):
    """A configuration file or expression failed to parse or validate."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [])


class ArtifactError(VBesselError, ValueError):
    """A persisted artifact is malformed or has an unsupported version."""
