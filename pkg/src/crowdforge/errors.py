"""Exception hierarchy shared across the pipeline.

Validation-type failures map to CLI exit code 2, missing stage
dependencies to exit code 3.
"""


class CrowdforgeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CrowdforgeError):
    """Input data violates a documented invariant."""


class ConfigError(ValidationError):
    """A configuration value is out of range or inconsistent."""


class FormatError(ValidationError):
    """On-disk data does not match the expected layout or shape."""


class EmptyInputError(ValidationError):
    """An operation that needs at least one element got none."""


class ShapeError(ValidationError):
    """Array arguments disagree in dimensions."""


class DependencyError(CrowdforgeError):
    """A pipeline stage ran before the stage it depends on."""

    def __init__(self, missing_stage: str, message: str | None = None):
        self.missing_stage = missing_stage
        super().__init__(message or f"required stage has not run: {missing_stage}")


class ScorerError(CrowdforgeError):
    """The external perceptual scorer failed."""


class ProtocolError(ScorerError):
    """The external scorer emitted output violating the wire protocol."""
