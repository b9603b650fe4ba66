"""Exception types shared across the package.

Everything derives from ValueError so callers can catch broadly; the
subclasses exist so tests and the CLI can tell validation failures apart.
"""


class DimensionError(ValueError):
    """A vector or grid has a length/shape incompatible with (M, N)."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class ProfileError(ValueError):
    """A channel profile is internally inconsistent."""


class ConfigError(ValueError):
    """A config document or checkpoint is malformed or inconsistent."""


class CapacityError(ValueError):
    """A dense materialization would exceed the configured cap."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


class StageFailure(RuntimeError):
    """A stage of a multi-stage experiment aborted; carries the stage tag."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        super().__init__(f"stage {stage!r} failed: {cause}")
