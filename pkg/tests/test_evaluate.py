import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftmon import (
    ChartKind,
    ChartParams,
    ConfusionCounts,
    MetricKind,
    RateInterval,
    SimulationConfig,
    bootstrap_ci,
    confusion,
    fit_baseline,
    k_sweep,
    rates,
    synth_pools,
)
from driftmon.errors import AllResamplesUndefined, UndefinedRate, UnknownId
from driftmon.evaluate import evaluate_all
from driftmon.simulate import SyntheticSourceConfig


def make_scored(n, accuracy, seed=0):
    """n items whose empirical accuracy is exactly `accuracy` (n*acc integral)."""
    rng = np.random.default_rng(seed)
    wrong = round(n * (1 - accuracy))
    labels = rng.integers(0, 2, size=n)
    flags = labels.copy()
    bad = rng.choice(n, size=wrong, replace=False)
    flags[bad] = 1 - flags[bad]
    return [(f"s{i:05d}", int(flags[i]), int(labels[i])) for i in range(n)]


class TestConfusion:
    def test_all_flagged_all_positive(self):
        truth = {f"i{k}": 1 for k in range(5)}
        c = confusion(set(truth), truth)
        assert (c.tp, c.fp, c.tn, c.fn) == (5, 0, 0, 0)
        # sensitivity is defined even though specificity is not (no negatives)
        assert rates(c, statistics=("sensitivity",)) == {"sensitivity": 1.0}
        with pytest.raises(UndefinedRate):
            rates(c)

    def test_no_flags(self):
        truth = {"a": 1, "b": 0}
        c = confusion(set(), truth)
        r = rates(c)
        assert r["sensitivity"] == 0.0
        assert r["specificity"] == 1.0

    def test_half_and_half(self):
        truth = {"p1": 1, "p2": 1, "n1": 0, "n2": 0}
        c = confusion({"p1", "n1"}, truth)
        r = rates(c)
        assert r == {"accuracy": 0.5, "sensitivity": 0.5, "specificity": 0.5}

    def test_unknown_id(self):
        with pytest.raises(UnknownId):
            confusion({"ghost"}, {"a": 0})

    def test_order_invariance(self):
        rng = np.random.default_rng(1)
        ids = [f"x{i}" for i in range(40)]
        truth = {i: int(rng.integers(0, 2)) for i in ids}
        flagged = {i for i in ids if rng.random() < 0.4}
        items = list(truth.items())
        shuffled = dict([items[j] for j in rng.permutation(len(items))])
        assert confusion(flagged, truth) == confusion(flagged, shuffled)


class TestRates:
    def test_near_miss_magnitudes(self):
        c = ConfusionCounts(tp=98, fn=2, tn=85, fp=15)
        r = rates(c)
        assert r["sensitivity"] == pytest.approx(0.98)
        assert r["specificity"] == pytest.approx(0.85)
        assert r["accuracy"] == pytest.approx(0.915)

    def test_perfect(self):
        r = rates(ConfusionCounts(tp=10, fn=0, tn=10, fp=0))
        assert r == {"accuracy": 1.0, "sensitivity": 1.0, "specificity": 1.0}

    def test_undefined_without_positives(self):
        with pytest.raises(UndefinedRate):
            rates(ConfusionCounts(tp=0, fn=0, tn=5, fp=1))

    def test_undefined_without_negatives(self):
        with pytest.raises(UndefinedRate):
            rates(ConfusionCounts(tp=5, fn=1, tn=0, fp=0))

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(tp=-1, fp=0, tn=0, fn=0)


class TestBootstrap:
    def test_degenerate_all_correct(self):
        scored = [(f"i{k}", 1, 1) for k in range(50)]
        ci = bootstrap_ci(scored, "accuracy", n_boot=100, subset_size=30, seed=1)
        assert (ci.point, ci.lower, ci.upper) == (1.0, 1.0, 1.0)

    def test_same_seed_same_ci(self):
        scored = make_scored(2000, 0.9)
        a = bootstrap_ci(scored, "accuracy", seed=7)
        b = bootstrap_ci(scored, "accuracy", seed=7)
        assert a == b

    def test_known_accuracy_point_and_width(self):
        scored = make_scored(10_000, 0.9)
        ci = bootstrap_ci(scored, "accuracy", n_boot=100, subset_size=500, seed=3)
        assert ci.point == pytest.approx(0.9, abs=1e-12)
        assert ci.lower <= ci.point <= ci.upper
        assert ci.upper - ci.lower < 0.1

    def test_endpoints_within_unit_interval(self):
        scored = make_scored(500, 0.8, seed=5)
        for stat in ("accuracy", "sensitivity", "specificity"):
            ci = bootstrap_ci(scored, stat, n_boot=50, subset_size=100, seed=9)
            assert 0.0 <= ci.lower <= ci.upper <= 1.0

    def test_coverage_of_point_estimate(self):
        scored = make_scored(4000, 0.85, seed=11)
        covered = 0
        for seed in range(20):
            ci = bootstrap_ci(scored, "accuracy", n_boot=200, subset_size=4000, seed=seed)
            covered += ci.point_in_ci
        assert covered >= 18  # >= 90% of seeds

    def test_skip_counting(self):
        # only one positive item: tiny resamples often miss it
        scored = [("p", 1, 1)] + [(f"n{k}", 0, 0) for k in range(200)]
        ci = bootstrap_ci(scored, "sensitivity", n_boot=100, subset_size=5, seed=2)
        assert ci.skipped_resamples > 0
        assert ci.n_boot == 100

    def test_undefined_point_propagates(self):
        scored = [(f"n{k}", 0, 0) for k in range(50)]
        with pytest.raises(UndefinedRate):
            bootstrap_ci(scored, "sensitivity", n_boot=10, subset_size=10, seed=0)

    def test_all_resamples_undefined(self):
        # full set has a positive (point defined) but tiny resamples miss it
        scored = [("p", 1, 1)] + [(f"n{k}", 0, 0) for k in range(499)]
        with pytest.raises(AllResamplesUndefined):
            bootstrap_ci(scored, "sensitivity", n_boot=5, subset_size=2, seed=0)

    def test_n_boot_minimum(self):
        with pytest.raises(ValueError):
            bootstrap_ci(make_scored(100, 0.9), "accuracy", n_boot=1)

    def test_evaluate_all_keys(self):
        out = evaluate_all(make_scored(1000, 0.9), n_boot=20, subset_size=200, seed=0)
        assert set(out) == {"accuracy", "sensitivity", "specificity"}

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10_000))
    def test_subset_scaling_shrinks_width(self, seed):
        scored = make_scored(20_000, 0.9, seed=seed)
        w500 = bootstrap_ci(scored, "accuracy", 100, 500, seed=seed).upper - \
            bootstrap_ci(scored, "accuracy", 100, 500, seed=seed).lower
        w2000 = bootstrap_ci(scored, "accuracy", 100, 2000, seed=seed).upper - \
            bootstrap_ci(scored, "accuracy", 100, 2000, seed=seed).lower
        assert w2000 < w500


class TestKSweep:
    def test_noiseless_delay_monotone_exact(self):
        # identical in-pool vectors, identical ood-pool vectors, post rate 1.0:
        # the daily series is a deterministic step; sweep absolute k
        dim = 4
        v_in = np.zeros(dim)
        v_in[0] = 1.0
        v_ood = np.ones(dim) / 2
        src = SyntheticSourceConfig(dim=dim, in_mean=v_in, ood_mean=v_ood, scale=0.0)
        pools = synth_pools(src, 50, 50, seed=0)
        train = synth_pools(src, 20, 1, seed=1).in_pool
        prof = fit_baseline(train, MetricKind.COSINE)
        assert prof.metric_stats.sigma == 0.0
        cfg = SimulationConfig(
            n_days=40, per_day=10, seed=4,
            pre_rate=RateInterval(0.0, 0.0), post_rate=RateInterval(1.0, 1.0),
            metric=MetricKind.COSINE,
            chart=ChartParams(chart=ChartKind.CUSUM, k_abs=0.0, h_abs=0.5),
        )
        step = 1.0 - (v_in @ v_ood)  # cosine drop once every item is OOD
        ks = [0.0, 0.1 * step, 0.3 * step, 0.6 * step]
        rows = k_sweep(cfg, ks, prof, pools, relative=False)
        delays = [r.detection_delay for r in rows]
        assert all(r.false_positives == 0 for r in rows)
        assert all(d is not None for d in delays)
        assert delays == sorted(delays)
        assert delays[0] < delays[-1]

    def test_k_beyond_shift_never_detects(self):
        dim = 4
        v_in = np.zeros(dim)
        v_in[0] = 1.0
        src = SyntheticSourceConfig(dim=dim, in_mean=v_in, ood_mean=np.ones(dim) / 2,
                                    scale=0.0)
        pools = synth_pools(src, 10, 10, seed=0)
        prof = fit_baseline(synth_pools(src, 20, 1, seed=1).in_pool, MetricKind.COSINE)
        cfg = SimulationConfig(
            n_days=30, per_day=10, seed=4,
            pre_rate=RateInterval(0.0, 0.0), post_rate=RateInterval(1.0, 1.0),
            metric=MetricKind.COSINE,
            chart=ChartParams(chart=ChartKind.CUSUM, k_abs=0.0, h_abs=0.5),
        )
        step = 1.0 - float(v_in @ (np.ones(dim) / 2) / np.linalg.norm(np.ones(dim) / 2))
        rows = k_sweep(cfg, [2.0 * step], prof, pools, relative=False)
        assert rows[0].detection_delay is None

    def test_requires_ks(self):
        with pytest.raises(ValueError):
            k_sweep(SimulationConfig(seed=0), [], None, None)
