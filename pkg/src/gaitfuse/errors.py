"""Exception types shared across the package.

Every error carries a stable ``code`` prefix so the CLI can report
machine-greppable failures on stderr.
"""


class GaitFuseError(Exception):
    code = "E_GENERIC"

    def __str__(self) -> str:
        return f"{self.code}: {super().__str__()}"


class ValidationError(GaitFuseError):
    """Input data violates a documented invariant."""

    code = "E_VALIDATION"


class ShapeError(ValidationError):
    """Matrix/vector dimensions do not match the operation contract."""

    code = "E_SHAPE"


class ConfigError(GaitFuseError):
    """Configuration value out of range or inconsistent."""

    code = "E_CONFIG"


class CheckpointError(GaitFuseError):
    """Checkpoint missing, malformed, or channel-incompatible."""

    code = "E_CHECKPOINT"


class TrainingDiverged(GaitFuseError):
    """Loss became non-finite during training."""

    code = "E_DIVERGED"
