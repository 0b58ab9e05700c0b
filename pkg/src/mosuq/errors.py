"""Exception types shared across the package."""


class MosuqError(Exception):
    """Base class for every package-specific error."""


class ConfigError(MosuqError, ValueError):
    """Invalid architecture, training, sampling, or generation configuration."""


class ShapeError(MosuqError, ValueError):
    """Array dimensions inconsistent with the declared architecture."""


class InputError(MosuqError, ValueError):
    """Rejected input data: empty, non-finite, wrong columns, bad class mix."""


class InvariantError(MosuqError, ValueError):
    """A documented runtime invariant was violated."""


class TrainingDivergedError(MosuqError, RuntimeError):
    """Training produced a non-finite loss and cannot continue."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}: non-finite loss")


class CheckpointError(MosuqError, ValueError):
    """Checkpoint file unreadable or structurally invalid."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format_version is not supported by this build."""
