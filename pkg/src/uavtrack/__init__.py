"""Detection-driven UAV tracking: Kalman filtering, camera motion
compensation, two-stage association, single-object reporting and
SOT/MOT evaluation."""

__version__ = "0.1.0"

from .geometry import BoundingBox, Detection, area, filter_min_area, iou
from .kalman import KalmanFilter, KalmanState
from .cmc import AffineTransform, estimate_affine_ransac, warp_state
from .assoc import embedding_cost, fuse_costs, iou_cost, linear_assignment
from .tracker import Tracker, TrackerConfig, TrackState
from .sot import Source, sot_select, track_sot
from .postproc import Tracklet, interpolate
from .metrics import average_mota, clear_match, mota, sot_accuracy
from .kernels import BACKEND

__all__ = [
    "AffineTransform", "BACKEND", "BoundingBox", "Detection", "KalmanFilter", "KalmanState", "Source",
    "TrackState", "Tracker", "TrackerConfig", "Tracklet", "area", "average_mota", "clear_match",
    "embedding_cost", "estimate_affine_ransac", "filter_min_area", "fuse_costs", "interpolate", "iou",
    "iou_cost", "linear_assignment", "mota", "sot_accuracy", "sot_select", "track_sot", "warp_state",
]
