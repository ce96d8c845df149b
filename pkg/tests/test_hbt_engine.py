import dataclasses
import math
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from pnrhbt.analytics import InsufficientSignalError, gamma_from_clicks, joint_click_probability
from pnrhbt.detector_model import DetectorParams, Threshold, Window
from pnrhbt.hbt_engine import (
    CoincidenceHistogram,
    ConfigError,
    ExperimentConfig,
    estimate_gamma,
    run,
    run_split_mode,
)
from pnrhbt.source_models import SourceSpec

FML = SourceSpec.from_mu_g2(2.8, 1.2)


def _cfg(**kw):
    base = dict(source=FML, n_pulses=200_000, max_delay=5, seed=42)
    base.update(kw)
    return ExperimentConfig(**base)


def test_zero_efficiency_gives_empty_histogram():
    d = DetectorParams(eta=0.0, sigma0=0.0)
    h = run(_cfg(det1=d, det2=d))
    assert h.counts.sum() == 0 and h.singles1 == 0 and h.singles2 == 0


def test_same_seed_is_bit_identical():
    a, b = run(_cfg()), run(_cfg())
    assert a == b
    assert a.counts.dtype == np.int64


def test_different_seed_differs():
    assert run(_cfg(seed=1)) != run(_cfg(seed=2))


@pytest.mark.parametrize("block_size", [1000, 7, 3])
def test_shard_count_does_not_change_result(block_size):
    # block sizes below max_delay exercise multi-block reach
    cfg = _cfg(n_pulses=50_003, block_size=block_size)
    ref = run(cfg, workers=1)
    for shards in (4, 16):
        assert run(dataclasses.replace(cfg, shards=shards), workers=1) == ref


def test_process_pool_matches_serial():
    cfg = _cfg(n_pulses=300_000, shards=4, block_size=20_000)
    assert run(cfg, workers=2) == run(cfg, workers=1)


def test_counts_match_brute_force_pairing():
    # recompute every delay bin from the raw click streams
    from pnrhbt import hbt_engine

    cfg = _cfg(n_pulses=5_000, block_size=900, max_delay=4, shards=3,
               disc1=Threshold(0.0), disc2=Threshold(0.0))
    blocks = [hbt_engine._simulate_block(cfg, b, False) for b in range(math.ceil(5_000 / 900))]
    c1 = np.concatenate([b[0] for b in blocks])
    c2 = np.concatenate([b[1] for b in blocks])
    h = run(cfg, workers=1)
    for d in range(-4, 5):
        expected = sum(1 for i in range(5_000) if 0 <= i + d < 5_000 and c1[i] and c2[i + d])
        assert h.at(d) == expected
    assert h.singles1 == c1.sum() and h.singles2 == c2.sum()


def test_config_validation():
    with pytest.raises(ConfigError):
        run(_cfg(split=1.0))
    with pytest.raises(ConfigError):
        run(_cfg(n_pulses=100, max_delay=10))
    with pytest.raises(ConfigError):
        run(_cfg(shards=0))
    with pytest.raises(ConfigError):
        run(_cfg(seed=-1))
    with pytest.raises(ConfigError):
        run(_cfg(max_delay=0))


def test_poisson_histogram_is_flat():
    cfg = _cfg(source=SourceSpec.poisson(2.6), n_pulses=2_000_000, max_delay=10)
    h = run(cfg)
    # each bin has (n_pulses - |d|) opportunities; near-equal expected counts
    weights = h.n_pulses - np.abs(h.delays)
    assert chisquare(h.counts, h.counts.sum() * weights / weights.sum()).pvalue > 1e-3
    r = estimate_gamma(h)
    assert abs(r.gamma - 1.0) <= 3 * r.stderr


def test_accidentals_equal_singles_product():
    cfg = _cfg(n_pulses=2_000_000, disc1=Threshold(0.1), disc2=Threshold(0.1))
    h = run(cfg)
    _, p1, p2 = joint_click_probability(FML, cfg.det1, cfg.det2, cfg.disc1, cfg.disc2)
    for d in (1, -3, 5):
        n = h.n_pulses - abs(d)
        mean = n * p1 * p2
        assert abs(h.at(d) - mean) <= 3 * math.sqrt(mean)
    assert abs(h.singles1 - h.n_pulses * p1) <= 3 * math.sqrt(h.n_pulses * p1 * (1 - p1))


def test_histogram_symmetric_for_identical_detectors():
    h = run(_cfg(n_pulses=2_000_000))
    for d in range(1, 6):
        a, b = h.at(d), h.at(-d)
        assert abs(a - b) <= 3 * math.sqrt(a + b)


@pytest.mark.parametrize("v", [0.065, 0.2])
def test_monte_carlo_matches_oracle(v):
    cfg = _cfg(n_pulses=2_000_000, disc1=Threshold(v), disc2=Threshold(v))
    r = estimate_gamma(run(cfg))
    oracle = gamma_from_clicks(*joint_click_probability(FML, cfg.det1, cfg.det2, cfg.disc1, cfg.disc2))
    assert abs(r.gamma - oracle) <= 3 * r.stderr


def test_window_discriminators_in_engine():
    w = Window(0.2, 0.33)
    cfg = _cfg(n_pulses=2_000_000, disc1=w, disc2=w)
    r = estimate_gamma(run(cfg))
    oracle = gamma_from_clicks(*joint_click_probability(FML, cfg.det1, cfg.det2, w, w))
    assert abs(r.gamma - oracle) <= 3 * r.stderr


# -- split-mode cross-check


def test_split_mode_singles_closed_form():
    d = DetectorParams(eta=1.0, sigma1=0.0, sigma0=0.0)
    cfg = _cfg(source=SourceSpec.poisson(2.0), det1=d, det2=d, n_pulses=1_000_000,
               disc1=Threshold(0.065), disc2=Threshold(0.065))
    h = run_split_mode(cfg)
    p = 1 - math.exp(-1.0)
    assert abs(h.singles1 / h.n_pulses - p) <= 3 * math.sqrt(p * (1 - p) / h.n_pulses)


def test_split_mode_zero_efficiency_and_determinism():
    d = DetectorParams(eta=0.0, sigma0=0.0)
    assert run_split_mode(_cfg(det1=d, det2=d)).counts.sum() == 0
    assert run_split_mode(_cfg()) == run_split_mode(_cfg())
    cfg = _cfg(n_pulses=30_000, block_size=1000)
    assert run_split_mode(dataclasses.replace(cfg, shards=4)) == run_split_mode(cfg)


def test_split_mode_equivalent_to_conditional_mode():
    cfg = _cfg(n_pulses=2_000_000, disc1=Threshold(0.1), disc2=Threshold(0.1))
    a, b = run(cfg), run_split_mode(cfg)
    for x, y in [(a.singles1, b.singles1), (a.singles2, b.singles2), (a.at(0), b.at(0))]:
        assert abs(x - y) <= 3 * math.sqrt(x + y)
    ra, rb = estimate_gamma(a), estimate_gamma(b)
    assert abs(ra.gamma - rb.gamma) <= 3 * math.hypot(ra.stderr, rb.stderr)


def test_split_mode_poisson_flat():
    cfg = _cfg(source=SourceSpec.poisson(2.6), n_pulses=1_000_000)
    r = estimate_gamma(run_split_mode(cfg))
    assert abs(r.gamma - 1.0) <= 3 * r.stderr


# -- estimator


def _hist(counts):
    return CoincidenceHistogram(np.array(counts, dtype=np.int64), 0, 0, 10_000)


def test_estimate_gamma_arithmetic():
    r = estimate_gamma(_hist([300] * 10 + [600] + [300] * 10))
    assert r.gamma == 2.0
    assert r.peak_count == 600 and r.accidental_mean == 300.0
    assert r.stderr == pytest.approx(2.0 * math.sqrt(1 / 600 + 1 / 6000))


def test_estimate_gamma_empty_accidentals():
    with pytest.raises(InsufficientSignalError):
        estimate_gamma(_hist([0, 0, 5, 0, 0]))


def test_estimate_gamma_empty_peak_has_positive_error():
    r = estimate_gamma(_hist([3, 0, 3]))
    assert r.gamma == 0.0 and r.stderr > 0


def test_fml_high_threshold_bunching_exceeds_g2():
    cfg = _cfg(n_pulses=3_000_000, max_delay=10, disc1=Threshold(0.3), disc2=Threshold(0.3))
    r = estimate_gamma(run(cfg))
    assert r.gamma - 3 * r.stderr > 1.2
    lo = estimate_gamma(run(dataclasses.replace(cfg, disc1=Threshold(0.065), disc2=Threshold(0.065))))
    assert r.gamma > lo.gamma


def test_throughput():
    cfg = ExperimentConfig(source=FML, n_pulses=2_000_000, seed=3)
    run(dataclasses.replace(cfg, n_pulses=100_000))
    t0 = time.perf_counter()
    run(cfg)
    rate = cfg.n_pulses / (time.perf_counter() - t0)
    print(f"throughput: {rate:.3g} pulses/s")
    assert rate >= 1e6
