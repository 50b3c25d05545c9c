"""Domain types, embedding-file ingestion, and baseline fitting.

A monitoring run starts from a set of d-dimensional feature vectors (one per
item), fits an in-distribution baseline (mean vector, optionally a regularized
covariance, and the control statistics of the chosen distance metric over the
training items), and persists that baseline as JSON for later scoring runs.

File formats (bit-exact contracts):

* NDJSON — one object per line with fields ``id`` (string, required),
  ``day`` (integer >= 0, optional), ``label`` (0 or 1, optional),
  ``vec`` (array of JSON numbers, required).
* CSV — header row ``id[,day][,label],v0,v1,...,v{d-1}``; numbers in decimal
  or scientific notation.

A fitted ``BaselineProfile`` is immutable and safe to share across concurrent
scorers; fitting itself is single-threaded.
"""
from __future__ import annotations

import csv
import dataclasses
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyTrainingSet,
    MalformedRow,
    NonFiniteValue,
    SingularCovariance,
)

BASELINE_FORMAT_VERSION = 1


class MetricKind(enum.Enum):
    """Distance metric used to score an item against the baseline."""

    COSINE = "cosine"
    MAHALANOBIS = "mahalanobis"

    @classmethod
    def parse(cls, name: str) -> "MetricKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown metric {name!r}")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """One item's feature representation.

    ``day`` is the batch index for temporal streams; ``label`` is optional
    ground truth (1 = out-of-distribution). All values must be finite and the
    dimension must be shared by every vector in one dataset.
    """

    id: str
    values: np.ndarray
    day: int | None = None
    label: int | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size < 1:
            raise MalformedRow(f"item {self.id!r}: vector must be 1-d and non-empty")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue(f"item {self.id!r}: non-finite feature value")
        if self.day is not None and (not isinstance(self.day, int) or self.day < 0):
            raise MalformedRow(f"item {self.id!r}: day must be a non-negative integer")
        if self.label is not None and self.label not in (0, 1):
            raise MalformedRow(f"item {self.id!r}: label must be 0 or 1")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class MetricStats:
    """Control statistics (mean, standard deviation) of a metric's scores."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True, eq=False)
class BaselineProfile:
    """Fitted in-distribution statistics shared by all scorers.

    ``covariance`` is the regularized sample covariance (present iff the
    profile was fitted for Mahalanobis scoring); ``covariance_inverse`` and the
    Cholesky factor are derived from it. Instances are immutable.
    """

    dim: int
    metric: MetricKind
    mean: np.ndarray
    n_samples: int
    lambda_rel: float
    metric_stats: MetricStats
    covariance: np.ndarray | None = None
    covariance_inverse: np.ndarray | None = field(default=None, repr=False)
    cholesky_lower: np.ndarray | None = field(default=None, repr=False)


def _parse_ndjson(text: str) -> list[FeatureVector]:
    out: list[FeatureVector] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise MalformedRow(f"line {lineno}: invalid JSON ({e.msg})") from e
        if not isinstance(obj, dict):
            raise MalformedRow(f"line {lineno}: expected a JSON object")
        if "id" not in obj or "vec" not in obj:
            raise MalformedRow(f"line {lineno}: missing required field 'id' or 'vec'")
        if not isinstance(obj["id"], str):
            raise MalformedRow(f"line {lineno}: 'id' must be a string")
        vec = obj["vec"]
        if not isinstance(vec, list) or not all(isinstance(v, (int, float)) for v in vec):
            raise MalformedRow(f"line {lineno}: 'vec' must be an array of numbers")
        day = obj.get("day")
        if day is not None and (not isinstance(day, int) or isinstance(day, bool) or day < 0):
            raise MalformedRow(f"line {lineno}: 'day' must be a non-negative integer")
        label = obj.get("label")
        if label is not None and label not in (0, 1):
            raise MalformedRow(f"line {lineno}: 'label' must be 0 or 1")
        try:
            out.append(FeatureVector(id=obj["id"], values=np.array(vec, dtype=np.float64),
                                     day=day, label=label))
        except NonFiniteValue as e:
            raise NonFiniteValue(f"line {lineno}: {e}") from e
    return out


def _parse_csv(text: str) -> list[FeatureVector]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return []
    if not header or header[0] != "id":
        raise MalformedRow("line 1: CSV header must start with 'id'")
    pos = 1
    has_day = pos < len(header) and header[pos] == "day"
    pos += int(has_day)
    has_label = pos < len(header) and header[pos] == "label"
    pos += int(has_label)
    expected = [f"v{i}" for i in range(len(header) - pos)]
    if header[pos:] != expected or not expected:
        raise MalformedRow("line 1: CSV header must end with columns v0,v1,...")

    out: list[FeatureVector] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        item_id = row[0]
        i = 1
        day = label = None
        try:
            if has_day:
                day = int(row[i]) if row[i] != "" else None
                i += 1
            if has_label:
                label = int(row[i]) if row[i] != "" else None
                i += 1
            vals = np.array([float(v) for v in row[i:]], dtype=np.float64)
        except ValueError as e:
            raise MalformedRow(f"line {lineno}: {e}") from e
        try:
            out.append(FeatureVector(id=item_id, values=vals, day=day, label=label))
        except NonFiniteValue as e:
            raise NonFiniteValue(f"line {lineno}: {e}") from e
    return out


def parse_dataset(source: bytes | str, format: str) -> list[FeatureVector]:
    """Parse an embedding file into feature vectors, in file order.

    ``format`` is "ndjson" or "csv". All vectors must share one dimension and
    ids must be unique; violations raise with the offending line number.
    """
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    if format == "ndjson":
        vectors = _parse_ndjson(text)
    elif format == "csv":
        vectors = _parse_csv(text)
    else:
        raise ValueError(f"unknown format {format!r}")

    seen: dict[str, int] = {}
    dim: int | None = None
    for row, fv in enumerate(vectors, start=1):
        if fv.id in seen:
            raise DuplicateId(f"row {row}: duplicate id {fv.id!r} (first at row {seen[fv.id]})")
        seen[fv.id] = row
        if dim is None:
            dim = fv.dim
        elif fv.dim != dim:
            raise DimensionMismatch(f"row {row}: vector length {fv.dim} != {dim}")
    return vectors


def _regularized_covariance(x: np.ndarray, lambda_rel: float) -> np.ndarray:
    n, d = x.shape
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    lam = lambda_rel * float(np.trace(cov)) / d
    return cov + lam * np.eye(d)


def fit_baseline(
    train: list[FeatureVector],
    metric: MetricKind,
    lambda_rel: float = 1e-6,
) -> BaselineProfile:
    """Fit the in-distribution baseline from training vectors.

    The mean is the per-component arithmetic mean; the covariance (Mahalanobis
    only, requires n >= 2) is the unbiased sample covariance plus
    ``lambda_rel * trace(S)/d`` on the diagonal. Metric control statistics are
    the sample mean/std of the chosen metric scored over the training vectors
    themselves. Vectors are summed in a canonical order (sorted by id) so the
    result is independent of input permutation.
    """
    from . import metrics  # late import; metrics needs BaselineProfile

    if not train:
        raise EmptyTrainingSet("training set is empty")
    if lambda_rel < 0:
        raise ValueError("lambda_rel must be >= 0")
    ordered = sorted(train, key=lambda fv: fv.id)
    dim = ordered[0].dim
    for fv in ordered:
        if fv.dim != dim:
            raise DimensionMismatch(f"item {fv.id!r}: vector length {fv.dim} != {dim}")
    x = np.stack([fv.values for fv in ordered])
    n = len(ordered)
    mean = x.mean(axis=0)

    cov = cov_inv = chol = None
    if metric is MetricKind.MAHALANOBIS:
        if n < 2:
            raise EmptyTrainingSet("Mahalanobis baseline needs at least 2 training vectors")
        cov = _regularized_covariance(x, lambda_rel)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as e:
            raise SingularCovariance(
                "covariance is not positive definite even after regularization; "
                "features are degenerate"
            ) from e
        cov_inv = scipy.linalg.cho_solve((chol, True), np.eye(dim))

    partial = BaselineProfile(
        dim=dim, metric=metric, mean=mean, n_samples=n, lambda_rel=lambda_rel,
        metric_stats=MetricStats(0.0, 0.0),
        covariance=cov, covariance_inverse=cov_inv, cholesky_lower=chol,
    )
    scores = np.array([metrics.score_one(fv, partial, metric).value for fv in ordered])
    sigma = float(scores.std(ddof=1)) if n >= 2 else 0.0
    stats = MetricStats(mu=float(scores.mean()), sigma=sigma)
    return dataclasses.replace(partial, metric_stats=stats)


def baseline_to_json(profile: BaselineProfile) -> str:
    """Serialize a baseline to its versioned JSON document."""
    doc = {
        "format_version": BASELINE_FORMAT_VERSION,
        "dim": profile.dim,
        "metric": profile.metric.value,
        "mean": [float(v) for v in profile.mean],
        "lambda": profile.lambda_rel,
        "n_samples": profile.n_samples,
        "metric_stats": {"mu": profile.metric_stats.mu, "sigma": profile.metric_stats.sigma},
    }
    if profile.covariance is not None:
        doc["covariance"] = [float(v) for v in profile.covariance.ravel(order="C")]
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def baseline_from_json(text: str) -> BaselineProfile:
    """Parse a baseline document; recomputes derived matrices from `covariance`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MalformedRow(f"baseline JSON: {e.msg}") from e
    if doc.get("format_version") != BASELINE_FORMAT_VERSION:
        raise MalformedRow(f"unsupported baseline format_version {doc.get('format_version')!r}")
    metric = MetricKind.parse(doc["metric"])
    dim = int(doc["dim"])
    mean = np.array(doc["mean"], dtype=np.float64)
    if mean.size != dim:
        raise DimensionMismatch(f"baseline mean length {mean.size} != dim {dim}")
    cov = cov_inv = chol = None
    if metric is MetricKind.MAHALANOBIS:
        flat = np.array(doc["covariance"], dtype=np.float64)
        if flat.size != dim * dim:
            raise DimensionMismatch("baseline covariance has wrong size")
        cov = flat.reshape(dim, dim)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as e:
            raise SingularCovariance("stored covariance is not positive definite") from e
        cov_inv = scipy.linalg.cho_solve((chol, True), np.eye(dim))
    stats = doc["metric_stats"]
    return BaselineProfile(
        dim=dim, metric=metric, mean=mean,
        n_samples=int(doc["n_samples"]), lambda_rel=float(doc["lambda"]),
        metric_stats=MetricStats(mu=float(stats["mu"]), sigma=float(stats["sigma"])),
        covariance=cov, covariance_inverse=cov_inv, cholesky_lower=chol,
    )


def baselines_equal(a: BaselineProfile, b: BaselineProfile) -> bool:
    """Exact field-by-field equality (used for round-trip checks)."""
    if (a.dim, a.metric, a.n_samples, a.lambda_rel) != (b.dim, b.metric, b.n_samples, b.lambda_rel):
        return False
    if a.metric_stats != b.metric_stats:
        return False
    if not np.array_equal(a.mean, b.mean):
        return False
    if (a.covariance is None) != (b.covariance is None):
        return False
    if a.covariance is not None and not np.array_equal(a.covariance, b.covariance):
        return False
    return True


def format_real(v: float) -> str:
    """17-significant-digit decimal rendering, lossless for float64."""
    if math.isnan(v) or math.isinf(v):
        raise NonFiniteValue("cannot serialize non-finite real")
    return format(v, ".17g")
