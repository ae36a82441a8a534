"""Exception types shared across the package."""


class AttestGameError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(AttestGameError):
    """An environment, strategy, or document violates a model invariant."""


class ConfigError(AttestGameError):
    """A scenario configuration is malformed (e.g. an inverted range)."""


class UnsupportedCaseError(AttestGameError):
    """The requested analysis is only defined for a single attestation method."""


class UndeterrableError(AttestGameError):
    """Attestation can never detect the attack, so no threshold exists."""


class EnumerationCapError(AttestGameError):
    """Exhaustive enumeration was refused because the device count exceeds the cap."""


class CalibrationError(AttestGameError):
    """Coverage calibration input is degenerate or malformed."""
