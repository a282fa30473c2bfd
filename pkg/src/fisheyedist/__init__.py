"""Inter-person distance estimation from a single overhead fisheye camera.

Two estimation paths: a calibrated unified-spherical-model inverse
projection with a height constraint, and a regression MLP on rotation-
invariant polar features; plus test-time center adjustment, synthetic
ground-truth generation, and a social-distance evaluation harness.
"""

from .adjust import BoundingBox, adjust, adjust_pair
from .camera import (
    CameraParams,
    FitReport,
    PixelPoint,
    WorldPoint,
    fit_params,
    height_to_pz,
    inverse_project,
    project,
)
from .dataio import (
    Category,
    DatasetStats,
    DetectionsFile,
    GroundTruthFile,
    GroundTruthPair,
    dataset_stats,
    load_detections,
    load_ground_truth,
    save_detections,
    save_ground_truth,
)
from .geometry import LocalizedPerson, batch_distances, estimate_distance
from .metrics import (
    EvalReport,
    GeometryEstimator,
    MlpEstimator,
    PairResult,
    evaluate_pipeline,
    mae,
    violations,
)
from .mlp import MlpModel, PairFeature, TrainConfig, extract_feature, gradient_check, train
from .synth import (
    GridSpec,
    Scene,
    VirtualPerson,
    generate_depof_layout,
    generate_grid,
    generate_scene,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox", "adjust", "adjust_pair",
    "CameraParams", "FitReport", "PixelPoint", "WorldPoint",
    "fit_params", "height_to_pz", "inverse_project", "project",
    "Category", "DatasetStats", "DetectionsFile", "GroundTruthFile", "GroundTruthPair",
    "dataset_stats", "load_detections", "load_ground_truth",
    "save_detections", "save_ground_truth",
    "LocalizedPerson", "batch_distances", "estimate_distance",
    "EvalReport", "GeometryEstimator", "MlpEstimator", "PairResult",
    "evaluate_pipeline", "mae", "violations",
    "MlpModel", "PairFeature", "TrainConfig", "extract_feature", "gradient_check", "train",
    "GridSpec", "Scene", "VirtualPerson",
    "generate_depof_layout", "generate_grid", "generate_scene",
]
