"""Exception types shared across the package.

Every error raised on a contract violation is a subclass of ChromasemError,
so callers (CLI, HTTP service) can map the whole family to exit codes or
status codes without enumerating modules.
"""


class ChromasemError(Exception):
    """Base class for all package-specific errors."""


class InvalidLabelError(ChromasemError):
    """A class label is outside [0, num_classes)."""


class ShapeError(ChromasemError):
    """Spatial size mismatch or a size violating a divisibility precondition."""


class FormatError(ChromasemError):
    """A file or byte stream is not in the expected format."""


class DatasetError(ChromasemError):
    """Dataset layout problem, e.g. an image without its label file."""


class CheckpointError(ChromasemError):
    """Base class for checkpoint container problems."""


class VersionMismatchError(CheckpointError):
    """Checkpoint format version is not supported."""


class TruncatedCheckpointError(CheckpointError):
    """Checkpoint file ends before all tensor blobs are present."""


class TensorNameError(CheckpointError):
    """Stored tensor names do not match the target network's parameters."""


class TrainingDivergedError(ChromasemError):
    """Loss became non-finite during optimization."""
