"""Shared exception types for the dcrsr package."""


class ShapeError(ValueError):
    """Tensor shape or channel count violates an operation's contract."""


class InvalidSize(ValueError):
    """A requested size (resize target, patch size, ...) is illegal."""


class PatchTooLarge(ValueError):
    """Requested crop does not fit inside the source image."""


class EmptyDataset(RuntimeError):
    """Dataset directory resolves to zero usable images."""


class TooSmall(ValueError):
    """Image too small for the requested metric window."""


class FusionError(RuntimeError):
    """Parameter trees cannot be fused (topology mismatch)."""


class ConfigError(ValueError):
    """Config file or override could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(RuntimeError):
    """Checkpoint file is malformed or incompatible."""


class TrainingAborted(RuntimeError):
    """Training stopped on a hard error (e.g. NaN loss).

    ``checkpoint_path`` points at the last good checkpoint, if any was
    written before the abort.
    """

    def __init__(self, message: str, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
