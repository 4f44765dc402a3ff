"""Full-reference stereoscopic image quality assessment by two-stage score fusion."""

from ._validation import DegenerateInputWarning
from .data import (ColorImage, DepthMap, Image, LoadError, ManifestError, Sample, ViewSet,
                   load_depth, load_image, load_manifest, write_manifest, write_pnm)
from .depth import (CameraConfig, ConfigurationError, DnoseProfile, ScorerUnavailableError,
                    build_dnose_profile, external_score, ndse)
from .evaluation import EvalReport, LogisticParams, evaluate, logistic_fit, pcc, rmse, srocc
from .features import FEATURE_NAMES, FeatureConfig, compute_features
from .paraboost import (DEFAULT_SCORERS, FoldPlan, ParaBoostModel, ParaBoostRegressor, ScorerSpec,
                        cross_validate, extract_dataset, extract_scorer_features, make_fold_plan,
                        progressive_fusion_report)
from .svr import GridSearchSpec, NuSVR, NuSVRCV, UnitScaler, grid_search, rbf_kernel

__version__ = "1.0.0"

__all__ = [
    "DegenerateInputWarning",
    "Image", "ColorImage", "DepthMap", "ViewSet", "Sample", "LoadError", "ManifestError",
    "load_image", "load_depth", "load_manifest", "write_manifest", "write_pnm",
    "CameraConfig", "ConfigurationError", "DnoseProfile", "ScorerUnavailableError",
    "build_dnose_profile", "external_score", "ndse",
    "EvalReport", "LogisticParams", "evaluate", "logistic_fit", "pcc", "rmse", "srocc",
    "FEATURE_NAMES", "FeatureConfig", "compute_features",
    "DEFAULT_SCORERS", "FoldPlan", "ParaBoostModel", "ParaBoostRegressor", "ScorerSpec",
    "cross_validate", "extract_dataset", "extract_scorer_features", "make_fold_plan",
    "progressive_fusion_report",
    "GridSearchSpec", "NuSVR", "NuSVRCV", "UnitScaler", "grid_search", "rbf_kernel",
]
