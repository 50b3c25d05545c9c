import numpy as np
import pytest

from driftmon import (
    ChartKind,
    ChartParams,
    MetricKind,
    RateInterval,
    SimulationConfig,
    default_source,
    fit_baseline,
    run_simulation,
    sample_day,
    synth_pools,
)
from driftmon.errors import EmptyPool
from driftmon.simulate import (
    Pools,
    delays_from_flags,
    ood_count_for_day,
    report_to_json,
)


@pytest.fixture(scope="module")
def source():
    return default_source(dim=8, separation=8.0)


@pytest.fixture(scope="module")
def baseline(source):
    train = synth_pools(source, 2000, 1, seed=900).in_pool
    return fit_baseline(train, MetricKind.COSINE)


@pytest.fixture(scope="module")
def pools(source):
    return synth_pools(source, 400, 400, seed=901)


def small_cfg(**kw):
    defaults = dict(n_days=20, per_day=30, seed=5,
                    pre_rate=RateInterval(0.0, 0.01), post_rate=RateInterval(0.2, 0.3),
                    metric=MetricKind.COSINE,
                    chart=ChartParams(chart=ChartKind.CUSUM))
    defaults.update(kw)
    return SimulationConfig(**defaults)


class TestSampleDay:
    def test_zero_pre_rate_means_no_ood(self, pools):
        cfg = small_cfg(pre_rate=RateInterval(0.0, 0.0))
        for day in range(cfg.shift_day):
            batch = sample_day(day, cfg, pools)
            assert sum(fv.label for fv in batch) == 0

    def test_rate_one_means_all_ood(self, pools):
        cfg = small_cfg(post_rate=RateInterval(1.0, 1.0))
        batch = sample_day(cfg.n_days - 1, cfg, pools)
        assert all(fv.label == 1 for fv in batch)
        assert len(batch) == cfg.per_day

    def test_batch_shape_and_day_stamp(self, pools):
        cfg = small_cfg()
        batch = sample_day(3, cfg, pools)
        assert len(batch) == cfg.per_day
        assert all(fv.day == 3 for fv in batch)
        assert len({fv.id for fv in batch}) == cfg.per_day

    def test_deterministic_and_horizon_independent(self, pools):
        b1 = sample_day(7, small_cfg(n_days=20), pools)
        b2 = sample_day(7, small_cfg(n_days=40), pools)
        assert [fv.id for fv in b1] == [fv.id for fv in b2]
        assert all(np.array_equal(x.values, y.values) for x, y in zip(b1, b2))

    def test_empty_pool_rejected(self, pools):
        with pytest.raises(EmptyPool):
            sample_day(0, small_cfg(), Pools(in_pool=[], ood_pool=pools.ood_pool))

    def test_binomial_count_mean(self):
        # fixed p = 0.04, 10_000 draws: mean within 0.1 of 4.0
        cfg = small_cfg(per_day=100, pre_rate=RateInterval(0.04, 0.04))
        rng = np.random.default_rng(77)
        counts = [ood_count_for_day(0, cfg, rng) for _ in range(10_000)]
        assert abs(np.mean(counts) - 4.0) <= 0.1


class TestSynthPools:
    def test_deterministic(self, source):
        a = synth_pools(source, 50, 60, seed=1)
        b = synth_pools(source, 50, 60, seed=1)
        assert all(np.array_equal(x.values, y.values) for x, y in zip(a.in_pool, b.in_pool))
        assert all(np.array_equal(x.values, y.values) for x, y in zip(a.ood_pool, b.ood_pool))

    def test_seed_changes_samples_not_distribution(self, source):
        a = synth_pools(source, 4000, 10, seed=1)
        b = synth_pools(source, 4000, 10, seed=2)
        xa = np.stack([fv.values for fv in a.in_pool])
        xb = np.stack([fv.values for fv in b.in_pool])
        assert not np.array_equal(xa, xb)
        assert np.allclose(xa.mean(axis=0), xb.mean(axis=0), atol=0.15)

    def test_labels_and_means(self, source):
        pools = synth_pools(source, 3000, 3000, seed=3)
        assert all(fv.label == 0 for fv in pools.in_pool)
        assert all(fv.label == 1 for fv in pools.ood_pool)
        xin = np.stack([fv.values for fv in pools.in_pool]).mean(axis=0)
        xood = np.stack([fv.values for fv in pools.ood_pool]).mean(axis=0)
        assert np.linalg.norm(xin - source.in_mean) < 0.2
        assert np.linalg.norm(xood - source.ood_mean) < 0.2

    def test_separation_is_mean_distance(self):
        src = default_source(dim=16, separation=8.0)
        assert np.linalg.norm(src.in_mean - src.ood_mean) == 8.0


class TestRunSimulation:
    def test_deterministic_report_bytes(self, baseline, pools):
        cfg = small_cfg()
        r1 = report_to_json(run_simulation(cfg, baseline, pools))
        r2 = report_to_json(run_simulation(cfg, baseline, pools))
        assert r1 == r2

    def test_different_seed_different_stream(self, baseline, pools):
        r1 = run_simulation(small_cfg(seed=5), baseline, pools)
        r2 = run_simulation(small_cfg(seed=6), baseline, pools)
        assert [d.metric_mean for d in r1.daily] != [d.metric_mean for d in r2.daily]

    def test_report_fields_consistent(self, baseline, pools):
        rep = run_simulation(small_cfg(), baseline, pools)
        assert len(rep.daily) == rep.config.n_days
        delay, fp = delays_from_flags(rep.flags, rep.config.shift_day)
        assert rep.detection_delay == delay
        assert rep.false_positives == fp
        if rep.detection_delay is None:
            assert rep.delay_after_first_post_day is None
        else:
            assert rep.delay_after_first_post_day == rep.detection_delay + 1

    def test_prefix_invariance(self, baseline, pools):
        short = run_simulation(small_cfg(n_days=12, shift_day=6), baseline, pools)
        long = run_simulation(small_cfg(n_days=20, shift_day=6), baseline, pools)
        assert [d.metric_mean for d in short.daily] == \
               [d.metric_mean for d in long.daily[:12]]

    def test_no_drift_no_cusum_flags(self, source):
        # quiet stream false-alarm control: >= 95% of 50 seeds flag-free
        train = synth_pools(source, 1000, 1, seed=910).in_pool
        prof = fit_baseline(train, MetricKind.COSINE)
        pools = synth_pools(source, 300, 300, seed=911)
        clean = 0
        for seed in range(50):
            cfg = small_cfg(n_days=16, per_day=25, seed=seed,
                            pre_rate=RateInterval(0.0, 0.0),
                            post_rate=RateInterval(0.0, 0.0))
            rep = run_simulation(cfg, prof, pools)
            clean += not rep.flags
        assert clean >= 48  # 95% of 50, rounded up

    def test_strong_drift_detected_mahalanobis(self, source):
        train = synth_pools(source, 3000, 1, seed=920).in_pool
        prof = fit_baseline(train, MetricKind.MAHALANOBIS)
        pools = synth_pools(source, 400, 400, seed=921)
        cfg = small_cfg(metric=MetricKind.MAHALANOBIS,
                        post_rate=RateInterval(0.5, 0.5), seed=3)
        rep = run_simulation(cfg, prof, pools)
        assert rep.detection_delay is not None
        assert rep.false_positives == 0

    def test_report_json_schema(self, baseline, pools):
        import json

        doc = json.loads(report_to_json(run_simulation(small_cfg(), baseline, pools)))
        assert doc["format_version"] == 1
        assert set(doc) == {"format_version", "config", "baseline", "daily", "flags",
                            "detection_delay", "delay_after_first_post_day",
                            "false_positives"}
        assert doc["config"]["shift_day"] == 10
        assert len(doc["daily"]) == 20

    def test_shift_day_validation(self):
        with pytest.raises(ValueError):
            small_cfg(n_days=10, shift_day=10)
        with pytest.raises(ValueError):
            small_cfg(n_days=10, shift_day=0)

    def test_rate_interval_validation(self):
        with pytest.raises(ValueError):
            RateInterval(0.5, 0.2)
        with pytest.raises(ValueError):
            RateInterval(-0.1, 0.2)
        with pytest.raises(ValueError):
            RateInterval(0.5, 1.2)
