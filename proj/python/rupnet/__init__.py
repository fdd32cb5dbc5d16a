"""RUPNet polyp segmentation: network, losses, metrics and synthetic data."""

from ._core import (
    ConfigError,
    CorruptCheckpoint,
    DataError,
    DecodeError,
    Error,
    InvalidArgument,
    IoError,
    Network,
    NetworkConfig,
    NumericError,
    ShapeError,
    bce_loss,
    benchmark_fps,
    combined_loss,
    dice_loss,
    gradcheck,
    image_metrics,
    ops,
    param_count,
    synthetic,
)

__all__ = [
    "ConfigError",
    "CorruptCheckpoint",
    "DataError",
    "DecodeError",
    "Error",
    "InvalidArgument",
    "IoError",
    "Network",
    "NetworkConfig",
    "NumericError",
    "ShapeError",
    "bce_loss",
    "benchmark_fps",
    "combined_loss",
    "dice_loss",
    "gradcheck",
    "image_metrics",
    "ops",
    "param_count",
    "synthetic",
]
