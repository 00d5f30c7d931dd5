"""Exception hierarchy shared by the library and the command line."""


class HypwaveError(Exception):
    """Base class for every error raised by hypwave."""
    pass


class GuardError(HypwaveError, ValueError):
    """Raised when an operation is called outside its documented preconditions."""
    pass


class DomainTooSmallError(GuardError):
    """Raised when r_max cannot contain the propagation over the requested time."""
    pass


class ResolutionError(GuardError):
    """Raised when a grid or quadrature is too coarse for the requested scale."""
    pass


class ConfigError(HypwaveError):
    """Raised for invalid run configurations; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class SolverAbort(HypwaveError):
    """Raised when a time stepper produces non-finite values."""

    def __init__(self, message: str, time: float, step: int):
        self.time = time
        self.step = step
        super().__init__(f"{message} (t={time:.6g}, step={step})")


class CriterionFailure(HypwaveError):
    """Raised when an acceptance criterion does not hold."""
    pass
