"""Pulse-by-pulse Monte Carlo of a two-detector HBT setup.

Each pulse draws a semiclassical intensity W, the two arms detect Poisson
counts conditioned on W, each count is turned into an avalanche voltage and
the discriminators decide whether the arm clicks. A coincidence at delay d
pairs a click of detector 1 on pulse i with a click of detector 2 on pulse
i + d.

Reproducibility: pulses are grouped into fixed-size blocks and each block
owns a Philox substream keyed by ``(seed, block index)``. Shards are
contiguous runs of blocks; delay pairs that straddle a shard boundary are
completed by regenerating the neighbouring block, so the merged histogram
does not depend on the shard count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import InsufficientSignalError
from .detector_model import (
    DetectorParams,
    Discriminator,
    Threshold,
    avalanche_voltage,
    disc_to_dict,
    thin,
)
from .source_models import ParameterError, SourceSpec, sample_pulse_intensity

BLOCK_SIZE = 1 << 16
GENERATOR_NAME = "numpy.random.Philox(SeedSequence(seed, spawn_key=(block,)))"


class ConfigError(ValueError):
    """Experiment configuration violates its invariants."""


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceSpec
    det1: DetectorParams = field(default_factory=DetectorParams)
    det2: DetectorParams = field(default_factory=DetectorParams)
    disc1: Discriminator = field(default_factory=lambda: Threshold(0.065))
    disc2: Discriminator = field(default_factory=lambda: Threshold(0.065))
    split: float = 0.5
    n_pulses: int = 1_000_000
    max_delay: int = 10
    seed: int = 0
    shards: int = 1
    block_size: int = BLOCK_SIZE

    def validate(self) -> None:
        if not 0 < self.split < 1:
            raise ConfigError(f"split must lie in (0, 1), got {self.split}")
        if self.max_delay < 1:
            raise ConfigError(f"max_delay must be >= 1, got {self.max_delay}")
        if self.n_pulses < 10 * (2 * self.max_delay + 1):
            raise ConfigError(
                f"n_pulses={self.n_pulses} too small for max_delay={self.max_delay}; "
                f"need >= {10 * (2 * self.max_delay + 1)}"
            )
        if self.shards < 1:
            raise ConfigError(f"shards must be >= 1, got {self.shards}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit value, got {self.seed}")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "source": self.source.to_dict(),
            "det1": self.det1.to_dict(),
            "det2": self.det2.to_dict(),
            "disc1": disc_to_dict(self.disc1),
            "disc2": disc_to_dict(self.disc2),
            "split": self.split,
            "n_pulses": self.n_pulses,
            "max_delay": self.max_delay,
            "seed": self.seed,
            "shards": self.shards,
            "block_size": self.block_size,
        }


@dataclass
class CoincidenceHistogram:
    """Coincidence counts for delays -D..D (``counts[d + D]``) plus singles."""

    counts: np.ndarray
    singles1: int
    singles2: int
    n_pulses: int
    meta: dict = field(default_factory=dict)

    @property
    def max_delay(self) -> int:
        return (len(self.counts) - 1) // 2

    @property
    def delays(self) -> np.ndarray:
        D = self.max_delay
        return np.arange(-D, D + 1)

    def at(self, d: int) -> int:
        return int(self.counts[d + self.max_delay])

    def __eq__(self, other):
        if not isinstance(other, CoincidenceHistogram):
            return NotImplemented
        return (
            np.array_equal(self.counts, other.counts)
            and (self.singles1, self.singles2, self.n_pulses)
            == (other.singles1, other.singles2, other.n_pulses)
        )


@dataclass(frozen=True)
class GammaResult:
    gamma: float
    stderr: float
    peak_count: int
    accidental_mean: float


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _clicks(v: np.ndarray, disc: Discriminator) -> np.ndarray:
    if isinstance(disc, Threshold):
        return v > disc.v_t
    return (v > disc.v_lo) & (v <= disc.v_hi)


def _simulate_block(cfg: ExperimentConfig, block: int, split_mode: bool):
    start = block * cfg.block_size
    n = min(cfg.block_size, cfg.n_pulses - start)
    rng = _rng(cfg.seed, block)
    W = sample_pulse_intensity(cfg.source, rng, n)
    if split_mode:
        total = rng.poisson(W)
        arm1 = rng.binomial(total, cfg.split)
        k1 = thin(arm1, cfg.det1.eta, rng)
        k2 = thin(total - arm1, cfg.det2.eta, rng)
    else:
        k1 = rng.poisson(cfg.det1.eta * cfg.split * W)
        k2 = rng.poisson(cfg.det2.eta * (1.0 - cfg.split) * W)
    c1 = _clicks(avalanche_voltage(k1, cfg.det1, rng), cfg.disc1)
    c2 = _clicks(avalanche_voltage(k2, cfg.det2, rng), cfg.disc2)
    return c1, c2


def _shard_ranges(n_blocks: int, shards: int) -> list[tuple[int, int]]:
    edges = [n_blocks * i // shards for i in range(shards + 1)]
    return [(edges[i], edges[i + 1]) for i in range(shards)]


def _run_shard(cfg: ExperimentConfig, b0: int, b1: int, split_mode: bool):
    D, B, N = cfg.max_delay, cfg.block_size, cfg.n_pulses
    n_blocks = math.ceil(N / B)
    reach = math.ceil(D / B)
    counts = np.zeros(2 * D + 1, dtype=np.int64)
    s1 = s2 = 0
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def get(b):
        if b not in cache:
            cache[b] = _simulate_block(cfg, b, split_mode)
        return cache[b]

    for b in range(b0, b1):
        for old in [k for k in cache if k < b - reach]:
            del cache[old]
        c1, c2 = get(b)
        s1 += int(np.count_nonzero(c1))
        s2 += int(np.count_nonzero(c2))
        lo_b, hi_b = max(0, b - reach), min(n_blocks - 1, b + reach)
        c2w = np.concatenate([get(j)[1] for j in range(lo_b, hi_b + 1)])
        start = b * B
        off = lo_b * B  # global index of c2w[0]
        end = start + c1.size
        for d in range(-D, D + 1):
            i0, i1 = max(start, -d), min(end, N - d)
            if i1 <= i0:
                continue
            counts[d + D] += np.count_nonzero(
                c1[i0 - start : i1 - start] & c2w[i0 + d - off : i1 + d - off]
            )
    return counts, s1, s2


def _run(cfg: ExperimentConfig, split_mode: bool, workers: int | None) -> CoincidenceHistogram:
    cfg.validate()
    n_blocks = math.ceil(cfg.n_pulses / cfg.block_size)
    ranges = _shard_ranges(n_blocks, cfg.shards)
    if workers is None:
        workers = min(cfg.shards, os.cpu_count() or 1)
    if workers > 1 and cfg.shards > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_shard, cfg, b0, b1, split_mode) for b0, b1 in ranges]
            parts = [f.result() for f in futs]
    else:
        parts = [_run_shard(cfg, b0, b1, split_mode) for b0, b1 in ranges]
    counts = np.zeros(2 * cfg.max_delay + 1, dtype=np.int64)
    s1 = s2 = 0
    for c, a, b in parts:
        counts += c
        s1 += a
        s2 += b
    meta = {
        "generator": GENERATOR_NAME,
        "numpy_version": np.__version__,
        "seed": cfg.seed,
        "shards": cfg.shards,
        "block_size": cfg.block_size,
        "mode": "split" if split_mode else "conditional",
    }
    return CoincidenceHistogram(counts, s1, s2, cfg.n_pulses, meta)


def run(config: ExperimentConfig, workers: int | None = None) -> CoincidenceHistogram:
    """Simulate the experiment and accumulate the coincidence histogram.

    Arm counts are drawn as independent Poisson variables conditioned on the
    pulse intensity. ``workers`` defaults to ``min(shards, cpu_count)``;
    it affects wall time only, never the result.
    """
    return _run(config, False, workers)


def run_split_mode(config: ExperimentConfig, workers: int | None = None) -> CoincidenceHistogram:
    """Same experiment via total photon number, binomial beamsplitter and binomial loss.

    Distributionally identical to :func:`run`; kept as a cross-check.
    """
    return _run(config, True, workers)


def estimate_gamma(hist: CoincidenceHistogram) -> GammaResult:
    """Zero-delay peak over the mean accidental (d != 0) count.

    The error is first-order propagation of Poisson counting noise in the
    peak and the pooled accidental bins.
    """
    D = hist.max_delay
    peak = int(hist.counts[D])
    acc = np.delete(hist.counts, D)
    acc_total = int(acc.sum())
    if acc_total == 0:
        raise InsufficientSignalError("all accidental bins are empty")
    acc_mean = acc_total / acc.size
    gamma = peak / acc_mean
    # an empty peak still carries the uncertainty of one count
    var = max(peak, 1) / acc_mean**2 + gamma**2 / acc_total
    return GammaResult(gamma, math.sqrt(var), peak, acc_mean)
