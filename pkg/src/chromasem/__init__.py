"""Semantic-map guided colorization of grayscale images.

The package splits into colorimetry (colorspace), the label-map domain
(semantic_map), the two networks (segnet, colornet), training and
serialization (training, checkpoint, weights), verification (gradcheck,
evalsuites, report), and the user-facing composition layers (pipeline,
cli, service).
"""

from .checkpoint import (
    Checkpoint,
    TARGET_COLORIZER,
    TARGET_SEGMENTER,
    load_checkpoint,
    load_model,
    save_checkpoint,
)
from .colornet import (
    ColorNet,
    ColorNetConfig,
    colornet_forward,
    encoder_forward,
    huber_loss,
    init_colornet,
    instance_norm,
)
from .colorspace import (
    LabImage,
    NetPlanes,
    decode_image,
    denormalize_merge,
    encode_png,
    lab_to_rgb,
    normalize,
    read_image,
    rgb_to_lab,
    write_png,
)
from .errors import (
    CheckpointError,
    ChromasemError,
    DatasetError,
    FormatError,
    InvalidLabelError,
    ShapeError,
    TensorNameError,
    TrainingDivergedError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from .pipeline import PipelineResult, colorize_pipeline, segment_image
from .segnet import (
    GridNet,
    GridNetConfig,
    gridnet_forward,
    init_gridnet,
    predict_map,
    seg_loss,
)
from .semantic_map import (
    ClassTable,
    SemanticMap,
    Stroke,
    apply_stroke,
    encode_map,
    load_class_table,
    load_map,
    new_map,
    save_map,
)
from .training import Sample, TrainConfig, load_dataset, train
from .weights import NetWeights

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "ChromasemError",
    "ClassTable",
    "ColorNet",
    "ColorNetConfig",
    "DatasetError",
    "FormatError",
    "GridNet",
    "GridNetConfig",
    "InvalidLabelError",
    "LabImage",
    "NetPlanes",
    "NetWeights",
    "PipelineResult",
    "Sample",
    "SemanticMap",
    "ShapeError",
    "Stroke",
    "TARGET_COLORIZER",
    "TARGET_SEGMENTER",
    "TensorNameError",
    "TrainConfig",
    "TrainingDivergedError",
    "TruncatedCheckpointError",
    "VersionMismatchError",
    "apply_stroke",
    "colorize_pipeline",
    "colornet_forward",
    "decode_image",
    "denormalize_merge",
    "encode_map",
    "encode_png",
    "encoder_forward",
    "gridnet_forward",
    "huber_loss",
    "init_colornet",
    "init_gridnet",
    "instance_norm",
    "lab_to_rgb",
    "load_checkpoint",
    "load_class_table",
    "load_dataset",
    "load_map",
    "load_model",
    "new_map",
    "normalize",
    "predict_map",
    "read_image",
    "rgb_to_lab",
    "save_checkpoint",
    "save_map",
    "seg_loss",
    "segment_image",
    "train",
    "write_png",
]
