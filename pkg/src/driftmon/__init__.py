"""driftmon: OOD detection and data-drift monitoring with SPC control charts."""

from .charts import (
    ChartKind,
    ChartParams,
    ControlLimits,
    CusumState,
    FlagEvent,
    Side,
    cusum_defaults,
    cusum_step,
    daily_average,
    monitor_stream,
    three_sigma_flags,
)
from .errors import DriftmonError
from .evaluate import BootstrapCI, ConfusionCounts, bootstrap_ci, confusion, k_sweep, rates
from .features import (
    BaselineProfile,
    FeatureVector,
    MetricKind,
    MetricStats,
    baseline_from_json,
    baseline_to_json,
    fit_baseline,
    parse_dataset,
)
from .image_features import GlcmMatrix, GrayImage, glcm, glcm_features, zero_order_stats
from .metrics import MetricValue, cosine_similarity, mahalanobis, score_batch
from .simulate import (
    Pools,
    RateInterval,
    SimulationConfig,
    SimulationReport,
    SyntheticSourceConfig,
    default_source,
    run_simulation,
    sample_day,
    synth_pools,
)

__all__ = [
    "BaselineProfile", "BootstrapCI", "ChartKind", "ChartParams", "ConfusionCounts",
    "ControlLimits", "CusumState", "DriftmonError", "FeatureVector", "FlagEvent",
    "GlcmMatrix", "GrayImage", "MetricKind", "MetricStats", "MetricValue", "Pools",
    "RateInterval", "Side", "SimulationConfig", "SimulationReport", "SyntheticSourceConfig",
    "baseline_from_json", "baseline_to_json", "bootstrap_ci", "confusion",
    "cosine_similarity", "cusum_defaults", "cusum_step", "daily_average", "default_source",
    "fit_baseline", "glcm", "glcm_features", "k_sweep", "mahalanobis", "monitor_stream",
    "parse_dataset", "rates", "run_simulation", "sample_day", "score_batch", "synth_pools",
    "three_sigma_flags", "zero_order_stats",
]

__version__ = "0.1.0"
