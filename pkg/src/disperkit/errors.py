"""Exception hierarchy shared by all disperkit modules."""


class DisperkitError(Exception):
    """Base class for every error raised by the package."""


class InvalidMaterialError(DisperkitError, ValueError):
    pass


class MeshError(DisperkitError, ValueError):
    pass


class MeshParseError(MeshError):
    """Malformed mesh text file. ``line`` is 1-based, or None if unknown."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AssemblyError(DisperkitError):
    pass


class SolverError(DisperkitError):
    """Eigensolver failure. ``k`` is the wavenumber at which it happened."""

    def __init__(self, message, k=None):
        self.k = k
        if k is not None:
            message = f"{message} (k={k!r})"
        super().__init__(message)


class MassNotSPDError(SolverError):
    pass


class ContractViolation(DisperkitError, ValueError):
    """An input violates a documented precondition."""


class DegenerateModeError(DisperkitError, ValueError):
    """A perturbation formula was requested for a mode with a vanishing gap."""


class StructuralError(DisperkitError, ValueError):
    """Inputs are individually valid but do not fit together."""


class ConfigError(DisperkitError, ValueError):
    pass
