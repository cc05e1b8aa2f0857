"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Input data is combinatorially malformed (bad ids, broken incidence)."""


class GeometryError(ValueError):
    """Geometric precondition violated (degenerate face, point outside region)."""


class DegenerateFaceError(GeometryError):
    """A quad has a zero-length diagonal."""


class DisconnectedNetworkError(ValueError):
    """Operation requires a connected network."""


class PackingError(RuntimeError):
    """Circle packing iteration failed to converge or lay out."""


class RhoPathError(RuntimeError):
    """No admissible path of circle-straddling edges could be constructed."""
