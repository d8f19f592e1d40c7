"""Buffered-IoU multi-object tracking: online cascaded tracker, offline
appearance-based tracklet refinement, MOT metrics, and a synthetic harness.
"""

from .geometry import BoundingBox, biou, buffer_box, diou, giou, iou
from .metrics import MetricReport, evaluate, hota, idf1, match_frame, mota
from .motion import BoxDelta, InsufficientHistory, MotionWindow, average_motion, predict_state
from .refine import (InconsistentCluster, MissingFeatures, attach_features, cluster,
                     refine, relabel, tracklet_distance)
from .tracker import (CBIoUTracker, OutOfOrderFrame, TrackerConfig, assignment,
                      run_sequence)
from .tracklet import Detection, Tracklet

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "buffer_box", "iou", "biou", "giou", "diou",
    "BoxDelta", "MotionWindow", "average_motion", "predict_state", "InsufficientHistory",
    "Detection", "Tracklet",
    "TrackerConfig", "CBIoUTracker", "run_sequence", "assignment", "OutOfOrderFrame",
    "tracklet_distance", "cluster", "relabel", "refine", "attach_features",
    "MissingFeatures", "InconsistentCluster",
    "MetricReport", "evaluate", "mota", "idf1", "hota", "match_frame",
    "__version__",
]
