"""CSV and metadata sidecar files.

CSV files use ``.`` decimals and ``\\n`` line endings; floats are written
with ``repr`` so they read back bit-exact. Lines starting with ``#`` are
comments. Each data file may carry a sidecar ``<stem>.meta`` with one
``key = <json value>`` per line.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .analytics import GammaCurve
from .hbt_engine import CoincidenceHistogram


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _parse(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def write_csv(path, header, rows, comments=()) -> Path:
    path = Path(path)
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[list[str], list[list]]:
    header = None
    rows = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([_parse(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header line")
    return header, rows


def meta_path(path) -> Path:
    return Path(path).with_suffix(".meta")


def write_meta(path, meta: dict) -> Path:
    """Write ``meta`` next to the data file at ``path``."""
    mp = meta_path(path)
    lines = [f"{k} = {json.dumps(v, sort_keys=True)}" for k, v in meta.items()]
    with open(mp, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return mp


def read_meta(path) -> dict:
    out = {}
    for line in meta_path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        out[key] = json.loads(value)
    return out


def write_histogram(path, hist: CoincidenceHistogram, meta: dict | None = None) -> list[Path]:
    path = write_csv(path, ["delay", "count"], zip(hist.delays, hist.counts))
    sidecar = {
        **(meta or {}),
        **hist.meta,
        "singles1": hist.singles1,
        "singles2": hist.singles2,
        "n_pulses": hist.n_pulses,
    }
    return [path, write_meta(path, sidecar)]


def read_histogram(path) -> CoincidenceHistogram:
    header, rows = read_csv(path)
    if header != ["delay", "count"]:
        raise ValueError(f"{path}: not a histogram file")
    meta = read_meta(path)
    counts = np.array([r[1] for r in rows], dtype=np.int64)
    singles1 = meta.pop("singles1")
    singles2 = meta.pop("singles2")
    n_pulses = meta.pop("n_pulses")
    return CoincidenceHistogram(counts, singles1, singles2, n_pulses, meta)


def write_curve(path, curve: GammaCurve, stderr=None, meta: dict | None = None) -> list[Path]:
    if stderr is None:
        path = write_csv(path, ["setting", "gamma"], curve.points)
    else:
        rows = [(s, g, e) for (s, g), e in zip(curve.points, stderr)]
        path = write_csv(path, ["setting", "gamma", "stderr"], rows)
    return [path, write_meta(path, {"mode": curve.mode, **curve.meta, **(meta or {})})]


def read_curve(path) -> GammaCurve:
    header, rows = read_csv(path)
    meta = read_meta(path)
    mode = meta.pop("mode")
    curve = GammaCurve(mode, [(r[0], r[1]) for r in rows], meta)
    if "stderr" in header:
        curve.meta["stderr"] = [r[2] for r in rows]
    return curve
