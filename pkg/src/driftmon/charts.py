"""Control-chart flagging: 3-sigma limits and two-sided CUSUM.

The 3-sigma chart flags a value that falls strictly outside
``[mu - m*sigma, mu + m*sigma]``; boundary values are in-control. CUSUM keeps
two one-sided cumulative sums,

    s_plus  <- max(0, s_plus  + (x - mu0 - k))
    s_minus <- max(0, s_minus - (x - mu0 + k))

and raises a flag when either sum strictly exceeds the decision threshold h.
Defaults are k = sigma/2 and h = 4*sigma. Sums are not reset after a flag
unless explicitly requested; which side signals out-of-distribution depends on
the metric's drift direction (cosine drifts low, Mahalanobis drifts high), so
both sides are always computed and reported.

`cusum_step` is sequential by definition; everything else here is pure and
parallelizable over independent streams.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import NonFiniteInput, ZeroSigma
from .features import format_real


class ChartKind(enum.Enum):
    THREE_SIGMA = "3sigma"
    CUSUM = "cusum"

    @classmethod
    def parse(cls, name: str) -> "ChartKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown chart {name!r}")


class Side(enum.Enum):
    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class ControlLimits:
    mu: float
    sigma: float
    multiplier: float = 3.0

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.multiplier < 0:
            raise ValueError("multiplier must be >= 0")

    @property
    def lower(self) -> float:
        return self.mu - self.multiplier * self.sigma

    @property
    def upper(self) -> float:
        return self.mu + self.multiplier * self.sigma


@dataclass(frozen=True)
class CusumState:
    """One-sided sums plus parameters; sums are always >= 0."""

    mu0: float
    k: float
    h: float
    s_plus: float = 0.0
    s_minus: float = 0.0

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if self.s_plus < 0 or self.s_minus < 0:
            raise ValueError("cumulative sums must be >= 0")


@dataclass(frozen=True)
class FlagEvent:
    """A detection: which item/day, the offending value, chart and side."""

    index: int
    value: float
    chart: ChartKind
    side: Side


def three_sigma_flags(values: list[float], limits: ControlLimits) -> list[FlagEvent]:
    """Flag indices whose value lies strictly outside the control band."""
    flags = []
    for i, v in enumerate(values):
        if v > limits.upper:
            flags.append(FlagEvent(i, v, ChartKind.THREE_SIGMA, Side.HIGH))
        elif v < limits.lower:
            flags.append(FlagEvent(i, v, ChartKind.THREE_SIGMA, Side.LOW))
    return flags


def daily_average(items: list[tuple[int, object]]) -> list[tuple[int, float]]:
    """Mean metric per day, ascending by day; days with no items are omitted.

    Accepts (day, MetricValue) or (day, float) pairs.
    """
    sums: dict[int, tuple[float, int]] = {}
    for day, v in items:
        if day is None:
            raise ValueError("daily averaging requires a day index on every item")
        x = float(getattr(v, "value", v))
        s, n = sums.get(day, (0.0, 0))
        sums[day] = (s + x, n + 1)
    return [(day, s / n) for day, (s, n) in sorted(sums.items())]


def cusum_defaults(sigma: float) -> tuple[float, float]:
    """(k, h) = (sigma/2, 4*sigma). Zero sigma gives an unusable h."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        raise ZeroSigma("sigma is 0; the default threshold h = 4*sigma would be 0")
    return sigma / 2.0, 4.0 * sigma


def cusum_step(state: CusumState, x: float, index: int = 0) -> tuple[CusumState, FlagEvent | None]:
    """Advance both sums by one observation; flag strictly above h.

    If both sums exceed h the side with the larger exceedance is reported.
    Sums are not reset here regardless of flagging.
    """
    if not math.isfinite(x):
        raise NonFiniteInput(f"observation at index {index} is not finite")
    s_plus = max(0.0, state.s_plus + (x - state.mu0 - state.k))
    s_minus = max(0.0, state.s_minus - (x - state.mu0 + state.k))
    new = replace(state, s_plus=s_plus, s_minus=s_minus)
    flag = None
    if s_plus > state.h or s_minus > state.h:
        side = Side.HIGH if s_plus - state.h >= s_minus - state.h else Side.LOW
        flag = FlagEvent(index, x, ChartKind.CUSUM, side)
    return new, flag


@dataclass(frozen=True)
class ChartParams:
    """Chart configuration; exactly one of the k (and h) forms may be set.

    Relative forms scale the baseline's per-item metric sigma: k = k_rel*sigma,
    h = h_rel*sigma, limits = mu +- multiplier*sigma.
    """

    chart: ChartKind
    k_rel: float | None = None
    k_abs: float | None = None
    h_rel: float | None = None
    h_abs: float | None = None
    multiplier: float = 3.0
    reset_on_flag: bool = False
    run_rules: bool = False

    def __post_init__(self) -> None:
        if self.k_rel is not None and self.k_abs is not None:
            raise ValueError("set only one of k_rel / k_abs")
        if self.h_rel is not None and self.h_abs is not None:
            raise ValueError("set only one of h_rel / h_abs")

    def resolve_cusum(self, sigma: float) -> tuple[float, float]:
        """Concrete (k, h) given the baseline sigma."""
        if self.k_abs is not None:
            k = self.k_abs
        elif self.k_rel is not None:
            if sigma == 0:
                raise ZeroSigma("relative k needs sigma > 0")
            k = self.k_rel * sigma
        else:
            k = cusum_defaults(sigma)[0]
        if self.h_abs is not None:
            h = self.h_abs
        elif self.h_rel is not None:
            if sigma == 0:
                raise ZeroSigma("relative h needs sigma > 0")
            h = self.h_rel * sigma
        else:
            h = cusum_defaults(sigma)[1]
        return k, h


def run_rule_flags(days: list[int], values: list[float], mu: float, sigma: float) -> list[FlagEvent]:
    """Experimental supplementary run rules on a daily series.

    Rule A: two out of three consecutive points beyond the same 2-sigma limit.
    Rule B: seven consecutive points strictly on one side of the mean.
    Flag index is the day completing the pattern.
    """
    flags: list[FlagEvent] = []
    hi2, lo2 = mu + 2 * sigma, mu - 2 * sigma
    for i in range(2, len(values)):
        window = values[i - 2: i + 1]
        if sum(1 for v in window if v > hi2) >= 2:
            flags.append(FlagEvent(days[i], values[i], ChartKind.THREE_SIGMA, Side.HIGH))
        elif sum(1 for v in window if v < lo2) >= 2:
            flags.append(FlagEvent(days[i], values[i], ChartKind.THREE_SIGMA, Side.LOW))
    run = 0
    for i, v in enumerate(values):
        sign = 1 if v > mu else (-1 if v < mu else 0)
        run = run + sign if sign and (run * sign > 0 or run == 0) else sign
        if abs(run) == 7:
            side = Side.HIGH if run > 0 else Side.LOW
            flags.append(FlagEvent(days[i], v, ChartKind.THREE_SIGMA, side))
            run = 0
    return flags


@dataclass(frozen=True)
class ChartRow:
    """One monitored observation with the chart state that judged it."""

    day: int
    value: float
    lower: float | None = None
    upper: float | None = None
    s_plus: float | None = None
    s_minus: float | None = None
    flag: bool = False
    side: Side | None = None


def monitor_stream(
    daily: list[tuple[int, float]],
    mu: float,
    sigma: float,
    params: ChartParams,
) -> tuple[list[FlagEvent], list[ChartRow]]:
    """Run one chart over an ascending daily series.

    Returns the flag list plus per-day rows for chart export. Flag indices are
    the original day indices, not positions.
    """
    days = [d for d, _ in daily]
    if any(b <= a for a, b in zip(days, days[1:])):
        raise ValueError("daily series must be strictly ascending by day")
    values = [v for _, v in daily]
    rows: list[ChartRow] = []
    flags: list[FlagEvent] = []

    if params.chart is ChartKind.THREE_SIGMA:
        limits = ControlLimits(mu, sigma, params.multiplier)
        positional = three_sigma_flags(values, limits)
        by_pos = {f.index: f for f in positional}
        for pos, (day, v) in enumerate(daily):
            f = by_pos.get(pos)
            if f is not None:
                f = replace(f, index=day)
                flags.append(f)
            rows.append(ChartRow(day, v, lower=limits.lower, upper=limits.upper,
                                 flag=f is not None, side=f.side if f else None))
        if params.run_rules:
            flags.extend(run_rule_flags(days, values, mu, sigma))
    else:
        k, h = params.resolve_cusum(sigma)
        state = CusumState(mu0=mu, k=k, h=h)
        for day, v in daily:
            state, flag = cusum_step(state, v, index=day)
            if flag is not None:
                flags.append(flag)
                if params.reset_on_flag:
                    state = replace(state, s_plus=0.0, s_minus=0.0)
            rows.append(ChartRow(day, v, s_plus=state.s_plus, s_minus=state.s_minus,
                                 flag=flag is not None, side=flag.side if flag else None))
    return flags, rows


def write_chart_csv(rows: list[ChartRow]) -> str:
    """`day,value,lower,upper,s_plus,s_minus,flag,side`; blanks where N/A."""
    def fmt(v: float | None) -> str:
        return "" if v is None else format_real(v)

    lines = ["day,value,lower,upper,s_plus,s_minus,flag,side"]
    for r in rows:
        side = r.side.value if r.side is not None else ""
        lines.append(",".join([
            str(r.day), format_real(r.value), fmt(r.lower), fmt(r.upper),
            fmt(r.s_plus), fmt(r.s_minus), "1" if r.flag else "0", side,
        ]))
    return "\n".join(lines) + "\n"


def read_daily_csv(text: str) -> list[tuple[int, float]]:
    """Read (day, value) pairs from a chart CSV or any CSV with those columns."""
    import csv as _csv
    import io as _io

    reader = _csv.DictReader(_io.StringIO(text))
    if reader.fieldnames is None or "day" not in reader.fieldnames or "value" not in reader.fieldnames:
        raise ValueError("need a CSV with 'day' and 'value' columns")
    return [(int(row["day"]), float(row["value"])) for row in reader]
