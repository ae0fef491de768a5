from typing import Optional


class BirthmarkError(Exception):
    """Base class for every failure raised by the laboratory.

    The CLI layer turns these into process exit codes, so each subclass
    carries the code it should map to.
    """
    exit_code: int = 1


class ConfigError(BirthmarkError, ValueError):
    """Raised when an experiment configuration fails validation.

    The offending key is kept on the exception so the CLI can name it.
    """
    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class InvalidDimensionError(BirthmarkError, ValueError):
    exit_code = 2


class InvalidCouplingError(BirthmarkError, ValueError):
    exit_code = 2


class InvalidStateError(BirthmarkError, ValueError):
    """Raised for non-normalized states or dimension mismatches."""
    exit_code = 2


class DomainError(BirthmarkError, ValueError):
    """Raised when a stadium, grid or wavepacket does not fit the simulation box."""
    exit_code = 2


class SolverError(BirthmarkError, ArithmeticError):
    """Raised when an eigendecomposition does not meet its accuracy contract."""
    exit_code = 3

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class InsufficientDataError(BirthmarkError, ArithmeticError):
    exit_code = 3


class CutoffError(BirthmarkError, ArithmeticError):
    """Raised when a short-time cutoff lies outside its admissible window."""
    exit_code = 3


class PropagationError(BirthmarkError, ArithmeticError):
    """Raised when a wavepacket propagation produces non-finite values."""
    exit_code = 3

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class EmitError(BirthmarkError, OSError):
    """Raised when an artifact cannot be written."""
    exit_code = 1

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message if path is None else f"{message}: {path}")
        self.path = path


__all__ = [
    'BirthmarkError',
    'ConfigError',
    'InvalidDimensionError',
    'InvalidCouplingError',
    'InvalidStateError',
    'DomainError',
    'SolverError',
    'InsufficientDataError',
    'CutoffError',
    'PropagationError',
    'EmitError',
]
