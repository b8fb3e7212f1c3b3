"""Range-aware sorted distance-distribution features for LiDAR scans."""

from ._core import (
    RapidError,
    RapidMatrix,
    extract,
    iou,
    knn,
    load_features,
    load_kitti_scan,
    rapid_matrix,
    save_features,
    synthetic_scene,
)

__all__ = [
    "RapidError",
    "RapidMatrix",
    "extract",
    "iou",
    "knn",
    "load_features",
    "load_kitti_scan",
    "rapid_matrix",
    "save_features",
    "synthetic_scene",
]
