"""Model avalanche-voltage densities for a coherent and a bunched source.

The source means here are detected fluxes, so the detector efficiency is
set to 1. Writes one CSV with both densities and a saturating-quench
variant, then prints the 0-photon weights and density crossings.
"""

import argparse
from pathlib import Path

import numpy as np

from pnrhbt.detector_model import (
    DetectorParams,
    Saturating,
    avalanche_density,
    calibrate_saturation,
    crossover_voltages,
)
from pnrhbt.io import write_csv
from pnrhbt.source_models import SourceSpec, pmf


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out/avalanche_densities.csv"))
    args = ap.parse_args()

    grid = np.round(np.arange(0, 751) * 0.001, 12)
    coh = pmf(SourceSpec.poisson(2.6))
    mix = pmf(SourceSpec.from_mu_g2(2.8, 1.2))
    lin = DetectorParams(eta=1.0)
    sat = DetectorParams(eta=1.0, quench=Saturating(calibrate_saturation(0.26, 0.18)))

    cols = {
        "poisson_linear": avalanche_density(coh, lin, grid),
        "mix_linear": avalanche_density(mix, lin, grid),
        "poisson_saturating": avalanche_density(coh, sat, grid),
        "mix_saturating": avalanche_density(mix, sat, grid),
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(args.out, ["voltage", *cols], zip(grid, *cols.values()))

    print(f"0-photon weight: poisson={coh.probs[0]:.4f} mix={mix.probs[0]:.4f}")
    for q in ("linear", "saturating"):
        xs = crossover_voltages(cols[f"poisson_{q}"], cols[f"mix_{q}"], grid)
        print(f"{q} crossings (V):", " ".join(f"{x:.3f}" for x in xs))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
