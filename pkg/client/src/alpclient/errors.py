"""Typed client-side errors mirroring the service's error classes."""


class ClientError(Exception):
    """Base class for all client errors."""


class TransportError(ClientError):
    """The HTTP request itself failed."""


class ParseRejected(ClientError):
    """The server could not parse the submitted recipe."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


class ValidationRejected(ClientError):
    """The recipe violates a hard safety rule."""

    def __init__(self, message: str, violations: list[str]):
        self.violations = violations
        super().__init__(message)


class BudgetExceeded(ClientError):
    """The recipe does not fit in the remaining reactor-time budget."""

    def __init__(self, message: str, requested: float, remaining: float):
        self.requested = requested
        self.remaining = remaining
        super().__init__(message)


class SolverAborted(ClientError):
    """The simulation diverged server-side; a flagged record was stored."""

    def __init__(self, message: str, experiment_id: int | None, time_used: float | None):
        self.experiment_id = experiment_id
        self.time_used = time_used
        super().__init__(message)


class NotFound(ClientError):
    """Unknown session, experiment, or configuration id."""


class BudgetMismatch(ClientError):
    """Local budget mirror and server accounting disagree."""
