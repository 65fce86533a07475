from hopqa.classify.features import (
    FeatureConfig,
    FeatureVector,
    HashedTfidfEncoder,
    extract_features,
    feature_matrix,
)
from hopqa.classify.stacking import (
    REFERENCE_META_WEIGHTS,
    ClassifierModel,
    FoldRecord,
    TrainingConfig,
    TrainingExample,
    classify,
    load_training_data,
    predict_proba,
    stack_probability,
    train,
)

__all__ = [
    "REFERENCE_META_WEIGHTS",
    "ClassifierModel",
    "FeatureConfig",
    "FeatureVector",
    "FoldRecord",
    "HashedTfidfEncoder",
    "TrainingConfig",
    "TrainingExample",
    "classify",
    "extract_features",
    "feature_matrix",
    "load_training_data",
    "predict_proba",
    "stack_probability",
    "train",
]
