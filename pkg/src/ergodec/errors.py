"""Exceptions shared across the package."""


class CapacityError(ValueError):
    """Exact enumeration requested beyond the documented size bound."""


class DegreeOverflowError(ValueError):
    """A permutation moves coordinates outside the configuration window."""


class ZeroMassError(ValueError):
    """Density ratio requested at a point of zero mass."""


class DivergentIntegralError(ValueError):
    """A normalization integral is infinite."""


class NonConvergenceError(RuntimeError):
    """Too many probe points failed limit detection; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
