"""Command-line pipeline: fit, score, monitor, simulate, features, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to stderr;
data goes to the named output files.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import charts, evaluate, image_features, metrics, simulate, svgchart
from .charts import ChartKind, ChartParams
from .errors import DriftmonError, MalformedRow
from .features import (
    MetricKind,
    baseline_from_json,
    baseline_to_json,
    fit_baseline,
    format_real,
    parse_dataset,
)

EMBEDDING_SCHEMA_HELP = """\
Embedding file formats:
  NDJSON: one object per line with fields
      id    string, required
      day   integer >= 0, optional
      label 0 or 1, optional
      vec   array of JSON numbers, required
  CSV: header row `id[,day][,label],v0,v1,...,v{d-1}`;
      numbers in decimal or scientific notation.
"""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for data errors."""

    def error(self, message):  # noqa: D102
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _detect_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "csv" if path.endswith(".csv") else "ndjson"


def _read_vectors(path: str, fmt: str | None):
    return parse_dataset(Path(path).read_bytes(), _detect_format(path, fmt))


def _rate(text: str) -> simulate.RateInterval:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return simulate.RateInterval(lo, hi)


def _add_chart_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chart", choices=[c.value for c in ChartKind], default="cusum")
    kg = p.add_mutually_exclusive_group()
    kg.add_argument("--k-rel", type=float, default=None,
                    help="CUSUM allowance in units of the baseline metric sigma (default 0.5)")
    kg.add_argument("--k-abs", type=float, default=None, help="CUSUM allowance, absolute")
    hg = p.add_mutually_exclusive_group()
    hg.add_argument("--h-rel", type=float, default=None,
                    help="CUSUM threshold in units of the baseline metric sigma (default 4)")
    hg.add_argument("--h-abs", type=float, default=None, help="CUSUM threshold, absolute")
    p.add_argument("--multiplier", type=float, default=3.0, help="3-sigma band width")
    p.add_argument("--reset-on-flag", action="store_true")
    p.add_argument("--experimental-run-rules", action="store_true",
                   help="also apply 2-of-3 beyond 2-sigma and 7-one-sided run rules")


def _chart_params(args) -> ChartParams:
    return ChartParams(
        chart=ChartKind.parse(args.chart),
        k_rel=args.k_rel, k_abs=args.k_abs, h_rel=args.h_rel, h_abs=args.h_abs,
        multiplier=args.multiplier, reset_on_flag=args.reset_on_flag,
        run_rules=args.experimental_run_rules,
    )


def cmd_fit(args) -> int:
    vectors = _read_vectors(args.input, args.format)
    profile = fit_baseline(vectors, MetricKind.parse(args.metric), args.lambda_rel)
    Path(args.out).write_text(baseline_to_json(profile))
    print(f"fitted baseline: n={profile.n_samples} d={profile.dim} "
          f"mu={format_real(profile.metric_stats.mu)} "
          f"sigma={format_real(profile.metric_stats.sigma)}", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    profile = baseline_from_json(Path(args.baseline).read_text())
    items = _read_vectors(args.input, args.format)
    values = metrics.score_batch(items, profile, profile.metric)
    limits = charts.ControlLimits(profile.metric_stats.mu, profile.metric_stats.sigma,
                                  args.multiplier)
    flags = {f.index: f for f in charts.three_sigma_flags([v.value for v in values], limits)}
    lines = ["id,metric,value,flag,side"]
    for i, (fv, mv) in enumerate(zip(items, values)):
        f = flags.get(i)
        lines.append(f"{fv.id},{mv.kind.value},{format_real(mv.value)},"
                     f"{1 if f else 0},{f.side.value if f else ''}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"scored {len(items)} items, flagged {len(flags)}", file=sys.stderr)
    return 0


def _monitor_series(args) -> list[tuple[int, float]]:
    if args.daily:
        return charts.read_daily_csv(Path(args.daily).read_text())
    items = _read_vectors(args.input, args.format)
    profile = baseline_from_json(Path(args.baseline).read_text())
    values = metrics.score_batch(items, profile, profile.metric)
    if any(fv.day is None for fv in items):
        raise MalformedRow("monitoring by day requires a day index on every item")
    return charts.daily_average([(fv.day, mv) for fv, mv in zip(items, values)])


def cmd_monitor(args) -> int:
    if args.daily:
        if args.mu is None or args.sigma is None:
            if not args.baseline:
                raise MalformedRow("--daily needs --mu/--sigma or --baseline")
            profile = baseline_from_json(Path(args.baseline).read_text())
            mu, sigma = profile.metric_stats.mu, profile.metric_stats.sigma
        else:
            mu, sigma = args.mu, args.sigma
    else:
        if not (args.input and args.baseline):
            raise MalformedRow("need either --daily or --input with --baseline")
        profile = baseline_from_json(Path(args.baseline).read_text())
        mu, sigma = profile.metric_stats.mu, profile.metric_stats.sigma
    series = _monitor_series(args)
    flags, rows = charts.monitor_stream(series, mu=mu, sigma=sigma, params=_chart_params(args))
    Path(args.out).write_text(charts.write_chart_csv(rows))
    if args.svg:
        Path(args.svg).write_text(svgchart.render_chart_svg(rows, title=args.chart))
    print(f"monitored {len(series)} days, {len(flags)} flags", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    cfg = simulate.SimulationConfig(
        n_days=args.days, per_day=args.per_day, shift_day=args.shift_day,
        pre_rate=args.pre, post_rate=args.post, seed=args.seed,
        metric=MetricKind.parse(args.metric), chart=_chart_params(args),
    )
    if args.pools == "synthetic":
        source = simulate.default_source(dim=args.dim, separation=args.separation)
        train = simulate.synth_pools(source, args.train_n, 1, seed=cfg.seed + 1).in_pool
        pools = simulate.synth_pools(source, args.pool_in, args.pool_ood, seed=cfg.seed)
    else:
        train = _read_vectors(args.train_file, None)
        pools = simulate.Pools(in_pool=_read_vectors(args.in_pool, None),
                               ood_pool=_read_vectors(args.ood_pool, None))
    baseline = fit_baseline(train, cfg.metric, args.lambda_rel)
    report = simulate.run_simulation(cfg, baseline, pools)
    Path(args.out).write_text(simulate.report_to_json(report))
    if args.chart_csv:
        Path(args.chart_csv).write_text(charts.write_chart_csv(report.chart_rows))
    if args.svg:
        Path(args.svg).write_text(svgchart.render_chart_svg(report.chart_rows, title=args.chart))
    if args.save_baseline:
        Path(args.save_baseline).write_text(baseline_to_json(baseline))
    print(f"simulated {cfg.n_days} days: delay={report.detection_delay} "
          f"false_positives={report.false_positives}", file=sys.stderr)
    return 0


def _iter_images(args):
    if args.raw:
        for path in args.raw:
            img = image_features.load_raw(Path(path).read_bytes(), args.width, args.height,
                                          args.raw_dtype)
            yield Path(path).name, img
    else:
        paths = sorted(Path(args.images).glob("*.pgm"))
        for path in paths:
            yield path.name, image_features.load_pgm(path.read_bytes())


def cmd_features(args) -> int:
    rows = []
    dim = None
    for name, img in _iter_images(args):
        parts = []
        if args.stats in ("zero", "both"):
            parts.append(image_features.zero_order_stats(img, id=name).values)
        if args.stats in ("glcm", "both"):
            m = image_features.glcm(img, levels=args.levels)
            parts.append(image_features.glcm_features(m, id=name).values)
        vec = np.concatenate(parts)
        if dim is None:
            dim = vec.size
        rows.append((name, vec))
    if dim is None:
        print("no images found", file=sys.stderr)
        Path(args.out).write_text("")
        return 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id"] + [f"v{i}" for i in range(dim)])
    for name, vec in rows:
        writer.writerow([name] + [format_real(float(v)) for v in vec])
    Path(args.out).write_text(buf.getvalue())
    print(f"extracted features for {len(rows)} images (d={dim})", file=sys.stderr)
    return 0


def _read_flags_csv(path: str) -> tuple[set[str], dict[str, int]]:
    """(flagged ids, flag map) from a score CSV with id and flag columns."""
    reader = csv.DictReader(io.StringIO(Path(path).read_text()))
    if reader.fieldnames is None or "id" not in reader.fieldnames or "flag" not in reader.fieldnames:
        raise MalformedRow(f"{path}: need CSV with 'id' and 'flag' columns")
    flags: dict[str, int] = {}
    for row in reader:
        flags[row["id"]] = int(row["flag"])
    return {i for i, f in flags.items() if f == 1}, flags


def _read_truth_csv(path: str) -> dict[str, int]:
    reader = csv.DictReader(io.StringIO(Path(path).read_text()))
    if reader.fieldnames is None or "id" not in reader.fieldnames or "label" not in reader.fieldnames:
        raise MalformedRow(f"{path}: need CSV with 'id' and 'label' columns")
    return {row["id"]: int(row["label"]) for row in reader}


def cmd_evaluate(args) -> int:
    _, flag_map = _read_flags_csv(args.flags)
    truth = _read_truth_csv(args.truth)
    missing = truth.keys() - flag_map.keys()
    if missing:
        raise MalformedRow(f"truth ids missing from flags file: {sorted(missing)[:5]}")
    scored = [(i, flag_map[i], label) for i, label in sorted(truth.items())]
    stats = evaluate.STATISTICS if args.stat == "all" else (args.stat,)
    results = evaluate.evaluate_all(scored, n_boot=args.n_boot, subset_size=args.subset,
                                    seed=args.seed, statistics=stats)
    Path(args.out).write_text(evaluate.metrics_report_json(results))
    for name, ci in results.items():
        print(f"{name}: {ci.point:.4f} [{ci.lower:.4f}, {ci.upper:.4f}]", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driftmon",
                     description="OOD detection and drift monitoring with SPC charts",
                     epilog=EMBEDDING_SCHEMA_HELP,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a baseline from embeddings",
                       epilog=EMBEDDING_SCHEMA_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["ndjson", "csv"], default=None)
    p.add_argument("--metric", choices=[m.value for m in MetricKind], required=True)
    p.add_argument("--lambda-rel", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score items and flag per-item 3-sigma outliers",
                       epilog=EMBEDDING_SCHEMA_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["ndjson", "csv"], default=None)
    p.add_argument("--baseline", required=True)
    p.add_argument("--multiplier", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("monitor", help="run a control chart over a daily series")
    p.add_argument("--input", help="embeddings with day indices (scored then day-averaged)")
    p.add_argument("--format", choices=["ndjson", "csv"], default=None)
    p.add_argument("--daily", help="CSV with day,value columns (e.g. simulate's chart CSV)")
    p.add_argument("--baseline")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    _add_chart_args(p)
    p.add_argument("--out", required=True, help="chart CSV path")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", help="simulate a drifting stream and monitor it")
    p.add_argument("--days", type=int, default=60)
    p.add_argument("--per-day", type=int, default=100)
    p.add_argument("--shift-day", type=int, default=None)
    p.add_argument("--pre", type=_rate, default=simulate.RateInterval(0.0, 0.01),
                   help="pre-shift OOD rate interval LO:HI")
    p.add_argument("--post", type=_rate, default=simulate.RateInterval(0.03, 0.05),
                   help="post-shift OOD rate interval LO:HI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=[m.value for m in MetricKind], default="cosine")
    _add_chart_args(p)
    p.add_argument("--pools", choices=["synthetic", "files"], default="synthetic")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--separation", type=float, default=8.0)
    p.add_argument("--train-n", type=int, default=10_000)
    p.add_argument("--pool-in", type=int, default=1000)
    p.add_argument("--pool-ood", type=int, default=1000)
    p.add_argument("--train-file", help="training embeddings (files mode)")
    p.add_argument("--in-pool", help="in-distribution stream pool (files mode)")
    p.add_argument("--ood-pool", help="OOD stream pool (files mode)")
    p.add_argument("--lambda-rel", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--chart-csv", default=None)
    p.add_argument("--svg", default=None)
    p.add_argument("--save-baseline", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="extract classical image features")
    p.add_argument("--images", help="directory of 8-bit P5 PGM files")
    p.add_argument("--raw", nargs="*", help="headerless binary image files")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--raw-dtype", choices=["u8", "f32", "f64"], default="u8")
    p.add_argument("--stats", choices=["zero", "glcm", "both"], default="both")
    p.add_argument("--levels", type=int, default=256, help="GLCM grey levels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("evaluate", help="detection quality with bootstrap CIs")
    p.add_argument("--flags", required=True, help="score CSV with id,flag columns")
    p.add_argument("--truth", required=True, help="CSV with id,label columns")
    p.add_argument("--stat", choices=["all", *evaluate.STATISTICS], default="all")
    p.add_argument("--n-boot", type=int, default=100)
    p.add_argument("--subset", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.pools == "files":
        if not (args.train_file and args.in_pool and args.ood_pool):
            parser.error("--pools files needs --train-file, --in-pool and --ood-pool")
    if args.command == "features" and not args.images and not args.raw:
        parser.error("features needs --images or --raw")
    if args.command == "features" and args.raw and (args.width is None or args.height is None):
        parser.error("--raw needs --width and --height")
    try:
        return args.func(args)
    except DriftmonError as e:
        print(f"driftmon: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"driftmon: missing file: {e.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
