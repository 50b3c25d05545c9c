"""Temporal drift simulation: daily batches with an induced OOD-rate shift.

A stream of ``n_days`` days is generated, each day a batch of ``per_day``
items mixed from an in-distribution pool and an OOD pool. The daily OOD
probability is drawn uniformly from ``pre_rate`` before ``shift_day`` and from
``post_rate`` on and after it; the day's OOD count is Binomial(per_day, p) and
items are sampled with replacement. Each day is scored against the baseline,
averaged, and the daily series is monitored with a control chart.

Every operation is a pure function of (config, seed): day k's batch depends
only on (seed, k), so extending the horizon never changes earlier days.
Per-day generators are derived with splitmix64 (see rngutil) feeding PCG64.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import charts, metrics
from .charts import ChartKind, ChartParams, ChartRow, FlagEvent
from .errors import EmptyPool
from .features import BaselineProfile, FeatureVector, MetricKind
from .rngutil import derived_rng

REPORT_FORMAT_VERSION = 1

# purpose tags for seed derivation, so streams never collide
_TAG_DAY = 1
_TAG_POOL_IN = 2
_TAG_POOL_OOD = 3


@dataclass(frozen=True)
class RateInterval:
    """A daily OOD-probability range [lo, hi] within [0, 1]."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"rate interval [{self.lo}, {self.hi}] must satisfy 0 <= lo <= hi <= 1")


@dataclass(frozen=True)
class SimulationConfig:
    n_days: int = 60
    per_day: int = 100
    shift_day: int | None = None  # defaults to n_days // 2
    pre_rate: RateInterval = RateInterval(0.0, 0.01)
    post_rate: RateInterval = RateInterval(0.03, 0.05)
    seed: int = 0
    metric: MetricKind = MetricKind.COSINE
    chart: ChartParams = field(default_factory=lambda: ChartParams(chart=ChartKind.CUSUM))

    def __post_init__(self) -> None:
        if self.n_days < 1 or self.per_day < 1:
            raise ValueError("n_days and per_day must be positive")
        if self.shift_day is None:
            object.__setattr__(self, "shift_day", self.n_days // 2)
        if not (0 < self.shift_day < self.n_days):
            raise ValueError("shift_day must lie strictly inside the horizon")


@dataclass(frozen=True)
class SyntheticSourceConfig:
    """Two isotropic Gaussians standing in for real feature pools."""

    dim: int
    in_mean: np.ndarray
    ood_mean: np.ndarray
    scale: float = 1.0

    def __post_init__(self) -> None:
        in_mean = np.asarray(self.in_mean, dtype=np.float64)
        ood_mean = np.asarray(self.ood_mean, dtype=np.float64)
        if in_mean.shape != (self.dim,) or ood_mean.shape != (self.dim,):
            raise ValueError("means must be length-dim vectors")
        if self.scale < 0:
            raise ValueError("scale must be >= 0")
        object.__setattr__(self, "in_mean", in_mean)
        object.__setattr__(self, "ood_mean", ood_mean)


def default_source(dim: int = 16, separation: float = 8.0) -> SyntheticSourceConfig:
    """In-distribution centered at separation*e1, OOD at the origin.

    Placing the in-distribution mean away from the origin keeps cosine
    similarity informative (the baseline mean has a direction) while the mean
    distance equals `separation` exactly, so Mahalanobis separation matches.
    """
    in_mean = np.zeros(dim)
    in_mean[0] = separation
    return SyntheticSourceConfig(dim=dim, in_mean=in_mean, ood_mean=np.zeros(dim))


@dataclass(frozen=True)
class Pools:
    in_pool: list[FeatureVector]
    ood_pool: list[FeatureVector]


def synth_pools(source: SyntheticSourceConfig, n_in: int, n_ood: int, seed: int) -> Pools:
    """Draw deterministic Gaussian pools; ids are stable and sortable."""
    if n_in < 1 or n_ood < 1:
        raise ValueError("pool sizes must be >= 1")
    rng_in = derived_rng(seed, _TAG_POOL_IN)
    rng_ood = derived_rng(seed, _TAG_POOL_OOD)
    sd = np.sqrt(source.scale)
    xs_in = source.in_mean + sd * rng_in.standard_normal((n_in, source.dim))
    xs_ood = source.ood_mean + sd * rng_ood.standard_normal((n_ood, source.dim))
    in_pool = [FeatureVector(id=f"in-{i:06d}", values=xs_in[i], label=0) for i in range(n_in)]
    ood_pool = [FeatureVector(id=f"ood-{i:06d}", values=xs_ood[i], label=1) for i in range(n_ood)]
    return Pools(in_pool=in_pool, ood_pool=ood_pool)


def ood_count_for_day(day: int, cfg: SimulationConfig, rng: np.random.Generator) -> int:
    """Draw the day's OOD count: p ~ U(rate interval), count ~ Binomial(per_day, p)."""
    interval = cfg.pre_rate if day < cfg.shift_day else cfg.post_rate
    p = float(rng.uniform(interval.lo, interval.hi))
    return int(rng.binomial(cfg.per_day, p))


def sample_day(day: int, cfg: SimulationConfig, pools: Pools) -> list[FeatureVector]:
    """One day's batch, labeled with ground truth and the day index.

    Deterministic: the generator is derived from (cfg.seed, day), so the batch
    is independent of how many other days exist.
    """
    if not pools.in_pool or not pools.ood_pool:
        raise EmptyPool("both pools must be non-empty")
    rng = derived_rng(cfg.seed, _TAG_DAY, day)
    n_ood = ood_count_for_day(day, cfg, rng)
    picks_ood = rng.integers(0, len(pools.ood_pool), size=n_ood)
    picks_in = rng.integers(0, len(pools.in_pool), size=cfg.per_day - n_ood)
    batch = [pools.ood_pool[i] for i in picks_ood] + [pools.in_pool[i] for i in picks_in]
    order = rng.permutation(cfg.per_day)
    out = []
    for slot, idx in enumerate(order):
        src = batch[idx]
        out.append(FeatureVector(id=f"d{day:03d}-{slot:03d}-{src.id}", values=src.values,
                                 day=day, label=src.label))
    return out


@dataclass(frozen=True)
class DayRecord:
    day: int
    metric_mean: float
    ood_count: int


@dataclass(frozen=True)
class SimulationReport:
    """Everything a drift run produced, ready for JSON export.

    ``detection_delay`` is (first flag day >= shift_day) - shift_day, so a flag
    on the shift day itself is delay 0; ``delay_after_first_post_day`` is the
    same event counted from the first post-shift day (i.e. delay 0 becomes 1).
    Either is None when no post-shift flag occurred.
    """

    config: SimulationConfig
    baseline_mu: float
    baseline_sigma: float
    daily: list[DayRecord]
    flags: list[FlagEvent]
    chart_rows: list[ChartRow]
    detection_delay: int | None
    delay_after_first_post_day: int | None
    false_positives: int


def run_simulation(cfg: SimulationConfig, baseline: BaselineProfile, pools: Pools) -> SimulationReport:
    """Generate, score, and monitor the full stream.

    The baseline must have been fitted on data disjoint from the streamed
    pools. Fully deterministic given cfg.seed.
    """
    daily_records: list[DayRecord] = []
    series: list[tuple[int, float]] = []
    for day in range(cfg.n_days):
        batch = sample_day(day, cfg, pools)
        values = metrics.score_batch(batch, baseline, cfg.metric)
        mean = float(np.mean([mv.value for mv in values]))
        n_ood = sum(1 for fv in batch if fv.label == 1)
        daily_records.append(DayRecord(day=day, metric_mean=mean, ood_count=n_ood))
        series.append((day, mean))

    flags, rows = charts.monitor_stream(
        series, mu=baseline.metric_stats.mu, sigma=baseline.metric_stats.sigma, params=cfg.chart)
    post = [f.index for f in flags if f.index >= cfg.shift_day]
    delay = (min(post) - cfg.shift_day) if post else None
    return SimulationReport(
        config=cfg,
        baseline_mu=baseline.metric_stats.mu,
        baseline_sigma=baseline.metric_stats.sigma,
        daily=daily_records,
        flags=flags,
        chart_rows=rows,
        detection_delay=delay,
        delay_after_first_post_day=None if delay is None else delay + 1,
        false_positives=sum(1 for f in flags if f.index < cfg.shift_day),
    )


def _chart_params_doc(p: ChartParams) -> dict:
    return {
        "chart": p.chart.value, "k_rel": p.k_rel, "k_abs": p.k_abs,
        "h_rel": p.h_rel, "h_abs": p.h_abs, "multiplier": p.multiplier,
        "reset_on_flag": p.reset_on_flag, "run_rules": p.run_rules,
    }


def report_to_json(report: SimulationReport) -> str:
    """Versioned report document; deterministic bytes for a given run."""
    cfg = report.config
    doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "config": {
            "n_days": cfg.n_days, "per_day": cfg.per_day, "shift_day": cfg.shift_day,
            "pre_rate": [cfg.pre_rate.lo, cfg.pre_rate.hi],
            "post_rate": [cfg.post_rate.lo, cfg.post_rate.hi],
            "seed": cfg.seed, "metric": cfg.metric.value,
            "chart_params": _chart_params_doc(cfg.chart),
        },
        "baseline": {"mu": report.baseline_mu, "sigma": report.baseline_sigma},
        "daily": [
            {"day": d.day, "metric_mean": d.metric_mean, "ood_count": d.ood_count}
            for d in report.daily
        ],
        "flags": [
            {"day": f.index, "value": f.value, "chart": f.chart.value, "side": f.side.value}
            for f in report.flags
        ],
        "detection_delay": report.detection_delay,
        "delay_after_first_post_day": report.delay_after_first_post_day,
        "false_positives": report.false_positives,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def delays_from_flags(flags: list[FlagEvent], shift_day: int) -> tuple[int | None, int]:
    """Independent recomputation of (detection_delay, false_positives)."""
    post = [f.index for f in flags if f.index >= shift_day]
    return ((min(post) - shift_day) if post else None,
            sum(1 for f in flags if f.index < shift_day))
