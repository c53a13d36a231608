"""2D lidar SLAM with star-convex objects and GP radial contours.

The filter keeps one joint Gaussian over the robot pose and, per
landmark, a center plus a radial contour sampled at fixed basis
angles. Scans are associated point-by-point through a chi-square gate
on the radial prediction, leftovers are clustered into new landmarks,
and an iterated extended Kalman update corrects the whole state.
"""

from __future__ import annotations

from .association import AssociationConfig, associate, cluster, initiate
from .config import ReportOptions, ScenarioConfig, from_dict, load, save, to_dict
from .contour_gp import (
    BasisGrid,
    ContourState,
    GpHyperparams,
    condition_on_radius,
    contour_process_noise,
    gp_measurement_model,
    gp_measurement_rows,
    gram,
    init_contour,
    kernel,
    predict_radius,
    predict_radius_batch,
)
from .errors import (
    ConfigError,
    ContourSlamError,
    DegenerateGeometryError,
    InvalidArgumentError,
    InvalidScenarioError,
    NumericalFailureError,
)
from .geometry import (
    RobotPose,
    Rotation2,
    global_to_local,
    local_to_global,
    normalize_angle,
    rotation_matrix,
)
from .landmark import (
    ContourBand,
    Landmark,
    area,
    contour_band,
    gate,
    likelihood,
    measurement_angle,
    radial_distance,
    radial_predictions,
)
from .metrics import (
    LandmarkSnapshot,
    RunLog,
    StepRecord,
    association_accuracy,
    map_iou,
    pose_rmse,
)
from .runner import run_scenario, summarize, write_report
from .simulator import (
    ArcSegment,
    FourierShape,
    Scan,
    SensorSpec,
    StraightSegment,
    TrajectorySpec,
    WorldObject,
    odometry_increment,
    pose_at,
    raycast,
    regular_polygon,
)
from .slam_filter import (
    AssociatedScan,
    NoiseConfig,
    ScanAssociation,
    SlamState,
    assert_covariance_health,
    augment,
    build_stacked_model,
    covariance_health,
    iekf_iterations,
    iekf_update,
    jacobian,
    measurement_fn,
    measurement_noise,
    predict,
)

__version__ = "0.1.0"

__all__ = [
    "ArcSegment",
    "AssociatedScan",
    "AssociationConfig",
    "BasisGrid",
    "ConfigError",
    "ContourBand",
    "ContourSlamError",
    "ContourState",
    "DegenerateGeometryError",
    "FourierShape",
    "GpHyperparams",
    "InvalidArgumentError",
    "InvalidScenarioError",
    "Landmark",
    "LandmarkSnapshot",
    "NoiseConfig",
    "NumericalFailureError",
    "ReportOptions",
    "RobotPose",
    "Rotation2",
    "RunLog",
    "Scan",
    "ScanAssociation",
    "ScenarioConfig",
    "SensorSpec",
    "SlamState",
    "StepRecord",
    "StraightSegment",
    "TrajectorySpec",
    "WorldObject",
    "area",
    "assert_covariance_health",
    "associate",
    "association_accuracy",
    "augment",
    "build_stacked_model",
    "cluster",
    "condition_on_radius",
    "contour_band",
    "contour_process_noise",
    "covariance_health",
    "from_dict",
    "gate",
    "global_to_local",
    "gp_measurement_model",
    "gp_measurement_rows",
    "gram",
    "iekf_iterations",
    "iekf_update",
    "init_contour",
    "initiate",
    "jacobian",
    "kernel",
    "likelihood",
    "load",
    "local_to_global",
    "map_iou",
    "measurement_angle",
    "measurement_fn",
    "measurement_noise",
    "normalize_angle",
    "odometry_increment",
    "pose_at",
    "pose_rmse",
    "predict",
    "predict_radius",
    "predict_radius_batch",
    "radial_distance",
    "radial_predictions",
    "raycast",
    "regular_polygon",
    "rotation_matrix",
    "run_scenario",
    "save",
    "summarize",
    "to_dict",
    "write_report",
]
