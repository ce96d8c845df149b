"""Command-line front end.

    pnrhbt avalanche-hist --config fml --out runs/
    pnrhbt simulate       --config fml --seed 7 --shards 4 --out runs/
    pnrhbt sweep          --config trio --mode threshold --out runs/
    pnrhbt analytic       --config trio --out runs/
    pnrhbt fixtures       --out tests/fixtures/golden

Every command writes its data files plus a ``manifest_<command>.json``
listing them. Exit codes: 0 ok, 3 config error, 4 numeric convergence
failure, 5 insufficient statistics, 6 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config as config_mod
from .analytics import (
    GammaCurve,
    InsufficientSignalError,
    NumericConvergenceError,
    UndefinedCorrelationError,
    g_order,
    gamma_threshold,
    gamma_window,
    sweep_gamma,
)
from .detector_model import Threshold, avalanche_density
from .fixtures import write_fixtures
from .hbt_engine import ConfigError, estimate_gamma, run
from .io import write_csv, write_curve, write_histogram, write_meta
from .source_models import ParameterError, pmf

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_CONVERGENCE = 4
EXIT_STATS = 5
EXIT_IO = 6

log = logging.getLogger("pnrhbt")


def _derived_seed(seed: int, *key: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=key).generate_state(2, np.uint64)
    return int(state[0])


def _common_meta(cfg, name, seed) -> dict:
    return {
        "artifact_version": __version__,
        "config": cfg.path,
        "source_name": name,
        "source": cfg.sources[name].to_dict(),
        "det1": cfg.det1.to_dict(),
        "det2": cfg.det2.to_dict(),
        "seed": seed,
    }


def cmd_avalanche_hist(cfg, out: Path, seed: int) -> list[Path]:
    grid = cfg.voltage_grid()
    files = []
    for name, src in cfg.sources.items():
        dens = avalanche_density(pmf(src), cfg.det1, grid)
        path = write_csv(out / f"{name}_avalanche.csv", ["voltage", "density"], zip(grid, dens))
        files += [path, write_meta(path, _common_meta(cfg, name, seed))]
    return files


def cmd_simulate(cfg, out: Path, seed: int) -> list[Path]:
    files = []
    for name in cfg.sources:
        exp = cfg.experiment(name, seed=seed)
        hist = run(exp)
        res = estimate_gamma(hist)
        meta = {**_common_meta(cfg, name, seed), "experiment": exp.to_dict()}
        files += write_histogram(out / f"{name}_hist.csv", hist, meta)
        print(
            f"{name}: gamma={res.gamma:.6g} stderr={res.stderr:.3g} "
            f"peak={res.peak_count} accidental_mean={res.accidental_mean:.6g} "
            f"singles1={hist.singles1} singles2={hist.singles2}"
        )
    return files


def cmd_sweep(cfg, out: Path, seed: int, mode: str | None = None) -> list[Path]:
    mode = mode or cfg.sweep.mode
    sw = cfg.sweep
    files = []
    for j, (name, src) in enumerate(cfg.sources.items()):
        meta = {**_common_meta(cfg, name, seed), "fixed": sw.fixed}
        if mode == "montecarlo":
            points, errs = [], []
            for i, v in enumerate(sorted(sw.settings)):
                exp = cfg.experiment(
                    name,
                    disc1=Threshold(float(sw.fixed)),
                    disc2=Threshold(float(v)),
                    seed=_derived_seed(seed, j, i),
                )
                res = estimate_gamma(run(exp))
                points.append((v, res.gamma))
                errs.append(res.stderr)
            curve = GammaCurve("montecarlo", points, {"x_axis_convention": "linear"})
            files += write_curve(out / f"{name}_{mode}.csv", curve, errs, meta)
        else:
            fixed = sw.fixed if mode != "voltage" else Threshold(float(sw.fixed))
            curve = sweep_gamma(src, cfg.det1, cfg.det2, fixed, sw.settings, mode, cfg.split)
            files += write_curve(out / f"{name}_{mode}.csv", curve, None, meta)
    return files


def cmd_analytic(cfg, out: Path, seed: int) -> list[Path]:
    n_max = min(cfg.det1.n_max, cfg.det2.n_max)
    files = []
    for name, src in cfg.sources.items():
        g_rows = [(n, g_order(src, n)) for n in range(1, 2 * n_max + 1)]
        path = write_csv(out / f"{name}_g.csv", ["order", "g"], g_rows)
        files += [path, write_meta(path, _common_meta(cfg, name, seed))]
        rows = [
            (n1, n2, gamma_window(src, n1, n2),
             gamma_threshold(src, cfg.det1.eta, cfg.det2.eta, n1, n2, n_max))
            for n1 in range(1, n_max + 1)
            for n2 in range(1, n_max + 1)
        ]
        path = write_csv(out / f"{name}_gamma.csv", ["n1", "n2", "gamma_window", "gamma_threshold"], rows)
        files += [path, write_meta(path, _common_meta(cfg, name, seed))]
    return files


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="fml", help="config path or preset (fml, lnt, lat, trio)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed; overrides the config")
    common.add_argument("--out", default="out", type=Path, help="output directory")
    common.add_argument("--shards", type=int, help="shard count for Monte Carlo runs")
    common.add_argument("--pulses", type=int, help="override experiment.n_pulses")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pnrhbt", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("avalanche-hist", parents=[common], help="model avalanche-voltage density")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo coincidence histogram")
    sw = sub.add_parser("sweep", parents=[common], help="gamma versus detector-2 setting")
    sw.add_argument("--mode", choices=config_mod.SWEEP_MODES)
    sub.add_parser("analytic", parents=[common], help="g(n) and gamma tables")
    sub.add_parser("fixtures", parents=[common], help="regenerate golden fixture files")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    t0 = time.perf_counter()
    try:
        if args.command == "fixtures":
            cfg = None
            seed = args.seed
        else:
            cfg = config_mod.load(args.config)
            if args.shards is not None:
                cfg.shards = args.shards
            if args.pulses is not None:
                cfg.n_pulses = args.pulses
            seed = args.seed if args.seed is not None else cfg.seed
            if seed is None:
                seed = secrets.randbits(64)
            if not 0 <= seed < 2**64:
                raise ConfigError(f"seed must be an unsigned 64-bit value, got {seed}")
            cfg.seed = seed
            cfg.experiment(next(iter(cfg.sources)))
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "fixtures":
            files = write_fixtures(args.out)
        elif args.command == "avalanche-hist":
            files = cmd_avalanche_hist(cfg, args.out, seed)
        elif args.command == "simulate":
            files = cmd_simulate(cfg, args.out, seed)
        elif args.command == "sweep":
            files = cmd_sweep(cfg, args.out, seed, args.mode)
        else:
            files = cmd_analytic(cfg, args.out, seed)
        manifest = {
            "command": args.command,
            "config": cfg.path if cfg else None,
            "seed": seed,
            "outputs": [str(f) for f in files],
            "artifact_version": __version__,
            "wall_seconds": round(time.perf_counter() - t0, 3),
        }
        mpath = args.out / f"manifest_{args.command}.json"
        mpath.write_text(json.dumps(manifest, indent=2) + "\n")
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericConvergenceError as exc:
        print(f"numeric convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InsufficientSignalError, UndefinedCorrelationError) as exc:
        print(f"insufficient statistics: {exc}", file=sys.stderr)
        return EXIT_STATS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("done in %.2fs", time.perf_counter() - t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
