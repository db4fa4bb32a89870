"""Motion curation, physics-constrained retargeting, and reliability metrics."""

from .config import (
    ConfigError,
    JointNames,
    PipelineConfig,
    config_from_dict,
    load_pipeline_config,
)
from .curation import (
    ContactScorer,
    CurationReport,
    FilterThresholds,
    GroundAligner,
    MotionCurator,
    align_to_ground,
    base_of_support,
    chunk,
    contact_scores,
    curate,
    distance_to_support,
    estimate_ground_plane,
    evaluate_clip,
    foot_contact_score,
    root_jerk_max,
)
from .filtering import FilterSpec, MotionSmoother, butterworth_zero_phase, smooth_motion
from .kinematics import (
    JointCorrespondence,
    adapt_source_shape,
    build_correspondence,
    fk_batch,
    fk_jacobian,
    forward_kinematics,
    load_correspondence,
    rigid_scale,
)
from .metrics import (
    QualityReport,
    aggregate_reports,
    joint_feasibility_pct,
    motion_fidelity_pct,
    non_floating_pct,
    non_penetration_pct,
    non_skating_pct,
    quality_report,
)
from .motion import (
    ContactSchedule,
    GroundPlane,
    MotionFormatError,
    RetargetedMotion,
    SourceMotion,
    load_retargeted_motion,
    load_source_motion,
    save_retargeted_motion,
    save_source_motion,
)
from .retarget import (
    MODES,
    LossTrace,
    LossWeights,
    OptimizerConfig,
    PhySinkRetargeter,
    parse_mode,
    retarget,
    total_loss,
)
from .robot import (
    Body,
    FootSite,
    Joint,
    RobotModel,
    load_robot_model,
    margin_bands,
    save_robot_model,
)
from .validation import RetargetError

__version__ = "0.1.0"

__all__ = [
    "Body",
    "ConfigError",
    "ContactSchedule",
    "ContactScorer",
    "CurationReport",
    "FilterSpec",
    "FilterThresholds",
    "FootSite",
    "GroundAligner",
    "GroundPlane",
    "Joint",
    "JointCorrespondence",
    "JointNames",
    "LossTrace",
    "LossWeights",
    "MODES",
    "MotionCurator",
    "MotionFormatError",
    "MotionSmoother",
    "OptimizerConfig",
    "PhySinkRetargeter",
    "PipelineConfig",
    "QualityReport",
    "RetargetError",
    "RetargetedMotion",
    "RobotModel",
    "SourceMotion",
    "adapt_source_shape",
    "aggregate_reports",
    "align_to_ground",
    "base_of_support",
    "build_correspondence",
    "butterworth_zero_phase",
    "chunk",
    "config_from_dict",
    "contact_scores",
    "curate",
    "distance_to_support",
    "estimate_ground_plane",
    "evaluate_clip",
    "fk_batch",
    "fk_jacobian",
    "foot_contact_score",
    "forward_kinematics",
    "joint_feasibility_pct",
    "load_correspondence",
    "load_pipeline_config",
    "load_retargeted_motion",
    "load_robot_model",
    "load_source_motion",
    "margin_bands",
    "motion_fidelity_pct",
    "non_floating_pct",
    "non_penetration_pct",
    "non_skating_pct",
    "parse_mode",
    "quality_report",
    "retarget",
    "rigid_scale",
    "root_jerk_max",
    "save_retargeted_motion",
    "save_robot_model",
    "save_source_motion",
    "smooth_motion",
    "total_loss",
]
