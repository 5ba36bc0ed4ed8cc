"""Exception types shared across the toolkit."""


class GradeProbeError(Exception):
    """Base class for all toolkit errors."""


class InvalidActionError(GradeProbeError):
    """An action referenced a phrase or segment outside the legal range."""


class GraderInputError(GradeProbeError):
    """A grading request was empty or contained oversize text."""


class GraderTransportError(GradeProbeError):
    """A remote grading call failed (network, protocol, or payload)."""

    def __init__(self, endpoint: str, cause: str):
        super().__init__(f"grading call to {endpoint} failed: {cause}")
        self.endpoint = endpoint
        self.cause = cause


class ConfigValidationError(GradeProbeError):
    """A config document, policy file, or CLI argument failed validation."""


class TrainingError(GradeProbeError):
    """Optimization produced a non-finite loss, gradient, or parameter."""
