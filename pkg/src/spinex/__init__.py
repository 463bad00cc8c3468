"""Similarity-based prediction with built-in neighbor explanations.

The public surface groups into: dataset handling (``data``), distance and
kernel math (``similarity``), the model itself (``predictor``),
explanations (``explain``), ensembles (``ensemble``), synthetic data
(``synthgen``), metrics and ranking (``evalrank``), and the benchmark
harness (``bench``).
"""

from .data import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    HealthReport,
    PreprocessConfig,
    check_health,
    handle_outliers,
    impute_missing,
    load_csv,
    save_csv,
)
from .ensemble import EnsembleModel, fit_bagging, fit_boosting, fit_stacking
from .evalrank import (
    MetricRecord,
    RankTable,
    accuracy,
    auc,
    estimated_energy,
    logloss,
    mae,
    r2,
    rank_models,
)
from .explain import (
    ExplanationReport,
    build_report,
    combination_impact,
    exclude,
    feature_contributions,
    global_feature_importance,
    interaction_effects,
    local_changes_grid,
    local_explanation,
    neighbor_counts,
    prediction_change_trace,
)
from .predictor import (
    SpinexConfig,
    SpinexModel,
    classifier_defaults,
    classifier_tuned,
    fit,
    predict_class,
    predict_proba,
    predict_regression,
    regressor_defaults,
    score,
    select_features,
)
from .similarity import (
    DistanceMatrix,
    NeighborSet,
    gaussian_weights,
    pairwise_distances,
    reciprocal_weights,
)
from .synthgen import (
    ClassificationGenSpec,
    RegressionGenSpec,
    gen_classification,
    gen_regression,
    gen_regression_family,
    gen_regression_linear,
)

__version__ = "0.1.0"
