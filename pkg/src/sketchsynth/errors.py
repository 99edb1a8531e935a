"""Exception types shared across the package."""


class SketchSynthError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SketchSynthError):
    """Input violates a precondition (non-finite values, out of range, too small)."""


class ShapeMismatchError(SketchSynthError):
    """Array shapes are inconsistent with each other or with the model config."""


class ConfigurationError(SketchSynthError):
    """A config value or the runtime setup makes the requested operation impossible."""


class ContractError(SketchSynthError):
    """A structured argument (loss report, style blend) misses a required part."""


class CheckpointFormatError(SketchSynthError):
    """Checkpoint file is unreadable or has an unsupported format version."""


class TrainingDivergedError(SketchSynthError):
    """A loss became non-finite; carries a diagnostic dump for postmortem."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BlankSketchWarning(UserWarning):
    """Sketch standardization found no stroke pixels; output is all background."""


class EditClippedWarning(UserWarning):
    """A stroke edit reached outside the canvas and was clipped to fit."""
