"""Perceived-risk engine for traffic logs.

Core layers: scene ingestion and slotting, trigger geometry, the per-object
risk decomposition, the 1/TTC baseline, windowed feature datasets with
consistency-filtered labels, and a semi-supervised training loop around a
pluggable classifier.
"""

from .scene import (
    Frame,
    KinematicState,
    ObjectKind,
    RatingPanel,
    Scenario,
    SceneError,
    TrafficObject,
    load_panel,
    load_scenario,
    make_object,
    nearest_objects,
    save_panel,
    save_scenario,
    validate_panel,
)
from .geometry import (
    ContactResult,
    OrientedRect,
    RpdTier,
    bearing,
    contact_angle,
    first_contact,
    propagate,
    rpd_rect,
)
from .risk import (
    DsprParams,
    RiskBreakdown,
    RiskVector,
    background_energy,
    object_risk,
    observation_sensitivity,
    relative_kinetic_energy,
    risk_vector,
    spatial_decay,
    time_decay,
)
from .ttc import TtcVector, inverse_ttc_vector
from .dataset import (
    ClassThresholds,
    FeatureWindow,
    LabeledDataset,
    consistency_filter,
    feature_frame,
    feature_windows,
    load_dataset,
    raw_labels,
    save_dataset,
    smote_nc,
    split_dataset,
)
from .synthetic import RaterProfile, default_profiles, default_suite, gen_scenario, simulate_raters
from .learning import (
    ExternalClassifier,
    Metrics,
    ReferenceClassifier,
    SelfTrainConfig,
    SoftmaxModel,
    TrainConfig,
    evaluate,
    load_model,
    metrics_from_predictions,
    predict_proba,
    save_model,
    self_train,
    train_reference,
)
from .pipeline import StudyConfig, build_dataset, compare_models, run_study

__version__ = "0.1.0"
