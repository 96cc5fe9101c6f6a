"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument: shape mismatch, bad value, malformed file/config."""


class SolverError(RuntimeError):
    """An iterative solve failed to converge; carries the final residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(SolverError):
    """The time stepper produced NaN/Inf; carries a diagnostic state dump."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
