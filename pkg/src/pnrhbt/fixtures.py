"""Golden reference values computed by brute-force moment sums.

The moments used here come from explicit sums over the truncated
photon-number distribution, never from the closed forms, so the fixtures
stay an independent check on :mod:`pnrhbt.analytics`.
"""

from __future__ import annotations

from functools import partial
from pathlib import Path

from .analytics import g_order, gamma_threshold, gamma_window
from .io import write_csv
from .source_models import SourceSpec, brute_force_moment

FIXTURE_N_TRUNC = 160
SIG_FIGS = 6


def fixture_sources() -> dict[str, SourceSpec]:
    return {
        "poisson_2.6": SourceSpec.poisson(2.6),
        "thermal_1": SourceSpec.thermal(1.0),
        "fml": SourceSpec.from_mu_g2(2.8, 1.2),
        "lnt": SourceSpec.from_mu_g2(2.6, 1.075),
        "lat": SourceSpec.from_mu_g2(2.6, 1.001),
    }


def _sig(x: float) -> float:
    return float(f"{x:.{SIG_FIGS}g}")


def fixture_tables(n_trunc: int = FIXTURE_N_TRUNC) -> dict[str, tuple[list, list]]:
    """Fixture tables as ``{filename: (header, rows)}`` at full precision."""
    moment = partial(_cached_moment, n_trunc=n_trunc)
    g_rows, win_rows, thr_rows = [], [], []
    for name, src in fixture_sources().items():
        for order in range(1, 9):
            g_rows.append([name, order, g_order(src, order, moment)])
        for n1 in range(1, 8):
            for n2 in range(1, 8):
                win_rows.append([name, n1, n2, gamma_window(src, n1, n2, moment)])
        for n2 in range(1, 8):
            g = gamma_threshold(src, 0.17, 0.17, 7, n2, 7, moment)
            thr_rows.append([name, 7, n2, 0.17, 7, g])
    return {
        "g_order.csv": (["source", "order", "g"], g_rows),
        "gamma_window.csv": (["source", "n1", "n2", "gamma"], win_rows),
        "gamma_threshold.csv": (["source", "n1_min", "n2_min", "eta", "n_max", "gamma"], thr_rows),
    }


_moment_cache: dict = {}


def _cached_moment(source: SourceSpec, k: int, n_trunc: int) -> float:
    key = (source, k, n_trunc)
    if key not in _moment_cache:
        _moment_cache[key] = brute_force_moment(source, k, n_trunc)
    return _moment_cache[key]


def write_fixtures(out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fname, (header, rows) in fixture_tables().items():
        rounded = [[_sig(v) if isinstance(v, float) else v for v in row] for row in rows]
        comments = [
            "golden values; regenerate with `pnrhbt fixtures --out <dir>`",
            f"factorial moments by explicit summation over the pmf truncated at n={FIXTURE_N_TRUNC}",
            f"rounded to {SIG_FIGS} significant figures",
        ]
        written.append(write_csv(out_dir / fname, header, rounded, comments))
    return written
