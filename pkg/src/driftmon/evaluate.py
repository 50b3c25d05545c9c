"""Detection quality: confusion counts, rates, bootstrap CIs, and k sweeps.

The positive class is OOD throughout. Confidence intervals are percentile
bootstrap: n_boot resamples of subset_size items drawn with replacement, the
statistic recomputed per resample (resamples where it is undefined are skipped
and counted), CI = the [2.5, 97.5] percentiles of the bootstrap distribution.
Resamples use per-index derived seeds, so they are order-independent and could
run in parallel; the distribution is sorted before taking percentiles.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import simulate
from .errors import AllResamplesUndefined, UndefinedRate, UnknownId
from .rngutil import derived_rng

STATISTICS = ("accuracy", "sensitivity", "specificity")

_TAG_RESAMPLE = 11


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(flagged: set[str], truth: dict[str, int]) -> ConfusionCounts:
    """Count outcomes over every id in `truth`; flagged ids must be known."""
    unknown = flagged - truth.keys()
    if unknown:
        raise UnknownId(f"flagged ids not present in truth: {sorted(unknown)[:5]}")
    tp = fp = tn = fn = 0
    for item_id, label in truth.items():
        is_flagged = item_id in flagged
        if label == 1:
            tp, fn = tp + int(is_flagged), fn + int(not is_flagged)
        else:
            fp, tn = fp + int(is_flagged), tn + int(not is_flagged)
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def rate_value(c: ConfusionCounts, statistic: str) -> float:
    """One rate; UndefinedRate when its denominator class is empty."""
    if statistic == "accuracy":
        if c.total == 0:
            raise UndefinedRate("accuracy undefined: no items")
        return (c.tp + c.tn) / c.total
    if statistic == "sensitivity":
        if c.tp + c.fn == 0:
            raise UndefinedRate("sensitivity undefined: no positive items")
        return c.tp / (c.tp + c.fn)
    if statistic == "specificity":
        if c.tn + c.fp == 0:
            raise UndefinedRate("specificity undefined: no negative items")
        return c.tn / (c.tn + c.fp)
    raise ValueError(f"unknown statistic {statistic!r}")


def rates(c: ConfusionCounts, statistics: tuple[str, ...] = STATISTICS) -> dict[str, float]:
    """The requested rates; error if any requested one is undefined."""
    return {s: rate_value(c, s) for s in statistics}


def _stat_value(flags: np.ndarray, labels: np.ndarray, statistic: str) -> float:
    pos = labels == 1
    if statistic == "accuracy":
        return float(np.mean(flags == labels))
    if statistic == "sensitivity":
        if not pos.any():
            raise UndefinedRate("no positives in resample")
        return float(np.mean(flags[pos] == 1))
    if statistic == "specificity":
        if pos.all():
            raise UndefinedRate("no negatives in resample")
        return float(np.mean(flags[~pos] == 0))
    raise ValueError(f"unknown statistic {statistic!r}")


@dataclass(frozen=True)
class BootstrapCI:
    point: float
    lower: float
    upper: float
    n_boot: int
    subset_size: int
    skipped_resamples: int

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError("lower CI endpoint above upper")

    @property
    def point_in_ci(self) -> bool:
        # percentile CIs need not cover the point estimate; callers report this
        return self.lower <= self.point <= self.upper


def bootstrap_ci(
    scored: list[tuple[str, int, int]],
    statistic: str,
    n_boot: int = 100,
    subset_size: int = 500,
    seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap CI of one statistic over (id, flag, truth) triples."""
    if not scored:
        raise ValueError("scored set is empty")
    if n_boot < 2:
        raise ValueError("n_boot must be >= 2")
    flags = np.array([f for _, f, _ in scored], dtype=np.int64)
    labels = np.array([t for _, _, t in scored], dtype=np.int64)
    # an undefined full-set statistic is the caller's data problem, not a
    # resampling artifact; let UndefinedRate propagate
    point = _stat_value(flags, labels, statistic)

    values: list[float] = []
    skipped = 0
    n = len(scored)
    for b in range(n_boot):
        rng = derived_rng(seed, _TAG_RESAMPLE, b)
        idx = rng.integers(0, n, size=subset_size)
        try:
            values.append(_stat_value(flags[idx], labels[idx], statistic))
        except UndefinedRate:
            skipped += 1
    if not values:
        raise AllResamplesUndefined(f"{statistic} undefined in every resample")
    lower, upper = np.percentile(np.sort(values), [2.5, 97.5])
    return BootstrapCI(point=point, lower=float(lower), upper=float(upper),
                       n_boot=n_boot, subset_size=subset_size, skipped_resamples=skipped)


def evaluate_all(
    scored: list[tuple[str, int, int]],
    n_boot: int = 100,
    subset_size: int = 500,
    seed: int = 0,
    statistics: tuple[str, ...] = STATISTICS,
) -> dict[str, BootstrapCI]:
    return {s: bootstrap_ci(scored, s, n_boot, subset_size, seed) for s in statistics}


def metrics_report_json(results: dict[str, BootstrapCI]) -> str:
    doc = {
        name: {
            "point": ci.point, "lower": ci.lower, "upper": ci.upper,
            "n_boot": ci.n_boot, "subset_size": ci.subset_size,
            "skipped_resamples": ci.skipped_resamples,
            "point_in_ci": ci.point_in_ci,
        }
        for name, ci in results.items()
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class KSweepRow:
    k: float
    detection_delay: int | None
    false_positives: int


def k_sweep(
    cfg: simulate.SimulationConfig,
    ks: list[float],
    baseline,
    pools,
    relative: bool = True,
) -> list[KSweepRow]:
    """One simulation per allowance k, everything else (incl. seed) fixed.

    `relative` sweeps k_rel (k in units of the baseline metric sigma);
    otherwise k_abs. The threshold h keeps the config's setting throughout.
    """
    if not ks:
        raise ValueError("ks must be non-empty")
    if any(k < 0 for k in ks):
        raise ValueError("k must be >= 0")
    import dataclasses

    rows = []
    for k in ks:
        if relative:
            chart = dataclasses.replace(cfg.chart, k_rel=k, k_abs=None)
        else:
            chart = dataclasses.replace(cfg.chart, k_abs=k, k_rel=None)
        report = simulate.run_simulation(dataclasses.replace(cfg, chart=chart), baseline, pools)
        rows.append(KSweepRow(k=k, detection_delay=report.detection_delay,
                              false_positives=report.false_positives))
    return rows
