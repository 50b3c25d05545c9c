"""Distance metrics between a test vector and the fitted baseline.

Two geometric scores are supported: Mahalanobis distance
``sqrt((x - mu)^T S^-1 (x - mu))`` against the baseline's regularized
covariance, and cosine similarity ``(x . mu) / (||x|| ||mu||)`` against the
baseline's mean vector. Both are pure functions of an immutable baseline and
safe to call concurrently.

Mahalanobis is evaluated through the Cholesky factor of S (a triangular
solve), not the explicit inverse; the stored inverse is derived output only.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, DriftmonError, MissingCovariance, ZeroVector
from .features import BaselineProfile, FeatureVector, MetricKind, format_real

# Quadratic forms more negative than this are reported, not silently clamped.
_NEGATIVE_QFORM_TOL = -1e-9


@dataclass(frozen=True)
class MetricValue:
    """A scored metric; cosine lies in [-1, 1], Mahalanobis is >= 0."""

    kind: MetricKind
    value: float


def _check_dim(x: FeatureVector, baseline: BaselineProfile) -> None:
    if x.dim != baseline.dim:
        raise DimensionMismatch(f"vector length {x.dim} != baseline dim {baseline.dim}")


def mahalanobis(x: FeatureVector, baseline: BaselineProfile) -> MetricValue:
    """Mahalanobis distance of x from the baseline distribution."""
    _check_dim(x, baseline)
    if baseline.cholesky_lower is None:
        raise MissingCovariance("baseline has no covariance; fit with the mahalanobis metric")
    dev = x.values - baseline.mean
    y = scipy.linalg.solve_triangular(baseline.cholesky_lower, dev, lower=True)
    q = float(y @ y)
    if q < 0.0:
        if q < _NEGATIVE_QFORM_TOL:
            warnings.warn(f"quadratic form {q} < {_NEGATIVE_QFORM_TOL}; clamping to 0",
                          RuntimeWarning, stacklevel=2)
        q = 0.0
    return MetricValue(MetricKind.MAHALANOBIS, float(np.sqrt(q)))


def cosine_similarity(x: FeatureVector, baseline: BaselineProfile) -> MetricValue:
    """Cosine of the angle between x and the baseline mean, clamped to [-1, 1]."""
    _check_dim(x, baseline)
    nx = float(np.linalg.norm(x.values))
    nm = float(np.linalg.norm(baseline.mean))
    if nx == 0.0 or nm == 0.0:
        raise ZeroVector("cosine similarity undefined for a zero-norm operand")
    value = float(x.values @ baseline.mean) / (nx * nm)
    return MetricValue(MetricKind.COSINE, min(1.0, max(-1.0, value)))


def score_one(x: FeatureVector, baseline: BaselineProfile, metric: MetricKind) -> MetricValue:
    if metric is MetricKind.MAHALANOBIS:
        return mahalanobis(x, baseline)
    return cosine_similarity(x, baseline)


def score_batch(
    items: list[FeatureVector],
    baseline: BaselineProfile,
    metric: MetricKind,
) -> list[MetricValue]:
    """Score each item in order; element i equals the single-item call.

    Errors from single-item scoring propagate with the item id attached.
    """
    out: list[MetricValue] = []
    for fv in items:
        try:
            out.append(score_one(fv, baseline, metric))
        except DriftmonError as e:
            raise type(e)(f"item {fv.id!r}: {e}") from e
    return out


def write_scores_csv(items: list[FeatureVector], values: list[MetricValue]) -> str:
    """`id,metric,value` rows with 17-significant-digit values."""
    lines = ["id,metric,value"]
    for fv, mv in zip(items, values):
        lines.append(f"{fv.id},{mv.kind.value},{format_real(mv.value)}")
    return "\n".join(lines) + "\n"
