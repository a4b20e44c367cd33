"""Exception types shared across the package."""


class SemflowError(Exception):
    """Base class for all semflow-specific errors."""


class ConfigError(SemflowError, ValueError):
    """Invalid case configuration (bad value, missing key, wrong type)."""


class MeshFormatError(SemflowError, ValueError):
    """Malformed mesh file.

    Parameters
    ----------
    message : str
        Human-readable description.
    offset : int, optional
        Byte offset in the file where the problem was detected.
    section : str, optional
        Name of the file section being parsed.
    """

    def __init__(self, message, offset=None, section=None):
        parts = [message]
        if section is not None:
            parts.append(f"section={section!r}")
        if offset is not None:
            parts.append(f"byte_offset={offset}")
        super().__init__("; ".join(parts))
        self.offset = offset
        self.section = section


class TopologyError(SemflowError, RuntimeError):
    """Non-conforming connectivity (dangling faces, inconsistent sharing)."""


class GeometryError(SemflowError, RuntimeError):
    """Invalid element geometry (non-positive Jacobian).

    Carries the offending element index and, when available, the local
    reference coordinates of the bad quadrature point.
    """

    def __init__(self, message, element=None, ref_coords=None):
        if element is not None:
            message = f"{message} (element {element}"
            if ref_coords is not None:
                r, s, t = ref_coords
                message += f", ref point r={r:+.6f} s={s:+.6f} t={t:+.6f}"
            message += ")"
        super().__init__(message)
        self.element = element
        self.ref_coords = ref_coords


class CheckpointError(SemflowError, ValueError):
    """Malformed or incompatible checkpoint file."""

    def __init__(self, message, offset=None, section=None):
        parts = [message]
        if section is not None:
            parts.append(f"section={section!r}")
        if offset is not None:
            parts.append(f"byte_offset={offset}")
        super().__init__("; ".join(parts))
        self.offset = offset
        self.section = section


class SolverBreakdownError(SemflowError, RuntimeError):
    """Krylov breakdown (e.g. non-positive curvature in CG).

    Distinguished from plain non-convergence so callers can tell a wrong
    operator/preconditioner pairing from a too-tight tolerance.
    """

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration
