"""Monte Carlo throughput (pulses per second) for a few shard/worker settings."""

import argparse
import dataclasses
import time

from pnrhbt.hbt_engine import ExperimentConfig, run
from pnrhbt.source_models import SourceSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pulses", type=int, default=10_000_000)
    ap.add_argument("--workers", type=int, nargs="*", default=[1])
    args = ap.parse_args()

    base = ExperimentConfig(SourceSpec.from_mu_g2(2.8, 1.2), n_pulses=args.pulses, seed=1)
    ref = None
    for shards in (1, 4, 16):
        for w in args.workers:
            cfg = dataclasses.replace(base, shards=shards)
            t0 = time.perf_counter()
            hist = run(cfg, workers=w)
            dt = time.perf_counter() - t0
            ref = ref or hist
            print(f"shards={shards:2d} workers={w}: {args.pulses / dt:.3g} pulses/s, identical={hist == ref}")


if __name__ == "__main__":
    main()
