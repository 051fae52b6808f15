"""Exception hierarchy.

Each family maps to one CLI exit code (see :mod:`decaphi.cli`).
"""


class DecError(Exception):
    """Base class for all solver errors."""


class ConfigError(DecError):
    pass


class MeshError(DecError):
    pass


class DegenerateTet(MeshError):
    pass


class DanglingVertex(MeshError):
    pass


class NonManifoldFace(MeshError):
    pass


class StructureViolation(MeshError):
    pass


class PointOutsideTet(MeshError):
    pass


class UnsupportedVersion(MeshError):
    pass


class MalformedSection(MeshError):
    def __init__(self, section, detail=""):
        self.section = section
        msg = f"malformed section ${section}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NoTets(MeshError):
    pass


class AsymmetricMesh(MeshError):
    pass


class MaterialError(ConfigError):
    pass


class NonPositiveMaterial(MaterialError):
    pass


class UncoveredTet(MaterialError):
    pass


class NegativeConductivity(MaterialError):
    pass


class LossyMaterialInEigenproblem(MaterialError):
    pass


class PortError(ConfigError):
    pass


class EmptyPath(PortError):
    pass


class ZeroCurrent(PortError):
    pass


class SelectorMissesBoundary(ConfigError):
    pass


class SolverError(DecError):
    pass


class DimensionMismatch(SolverError):
    pass


class SingularSystem(SolverError):
    pass


class ToleranceNotReached(SolverError):
    """Raised when an iterative solve stalls; carries the best iterate."""

    def __init__(self, message, x=None, residual=None):
        super().__init__(message)
        self.x = x
        self.residual = residual


class ConvergenceFailure(SolverError):
    pass


class ZeroFrequency(SolverError):
    pass


class IoFailure(DecError):
    pass


class ClosedPathWarning(UserWarning):
    """A closed excitation loop carries no charge; the port has no gap."""
