"""Exception types shared across the package."""


class ShapeMismatchError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class StaleTapeError(RuntimeError):
    """A backward pass was attempted with a tape that was already consumed."""


class NonFiniteError(FloatingPointError):
    """A NaN or Inf appeared in a value that must stay finite."""

    def __init__(self, stage, message=None):
        self.stage = stage
        super().__init__(message or f"non-finite values detected at stage '{stage}'")


class DataFormatError(ValueError):
    """A dataset file violates its binary format."""


class CheckpointError(ValueError):
    """A checkpoint file is malformed or inconsistent."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, stage, epoch, batch_index):
        self.stage = stage
        self.epoch = epoch
        self.batch_index = batch_index
        super().__init__(
            f"training diverged at epoch {epoch}, batch {batch_index}: "
            f"first non-finite stage is '{stage}'"
        )
