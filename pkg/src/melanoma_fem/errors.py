"""Exception types raised across the package."""


class MelanomaFemError(Exception):
    """Base class for all package errors."""


class UnknownMonth(MelanomaFemError, ValueError):
    """Requested growth month is not one of the tabulated months."""


class NonDivisibleExtent(MelanomaFemError, ValueError):
    """A box edge is not an integer multiple of the mesh size."""


class DegenerateElement(MelanomaFemError, ValueError):
    """A tetrahedron has zero or negative volume."""


class LatticeMismatch(MelanomaFemError, ValueError):
    """Finite element nodes do not coincide with finite difference lattice nodes."""


class CflViolation(MelanomaFemError, RuntimeError):
    """Explicit time stepping became unstable or the step violates the CFL bound."""


class ConfigError(MelanomaFemError, ValueError):
    """Run configuration failed validation."""
