"""Photon-number-resolving avalanche photodiode model.

A detected photon number k produces an avalanche voltage drawn from a
Gaussian centred on ``peak_center(k)``. The noise peak (k = 0) has width
``sigma0``; photon peaks have width ``sigma1 * sqrt(k)``. Peak centres are
linear in k unless a saturating quench map is selected, which compresses
large avalanches toward ``v_sat``.

Photon numbers above ``n_max`` land on the ``n_max`` peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr
from scipy.stats import binom

from .source_models import ParameterError, PhotonPmf


@dataclass(frozen=True)
class Linear:
    pass


@dataclass(frozen=True)
class Saturating:
    v_sat: float

    def __post_init__(self):
        if not self.v_sat > 0:
            raise ParameterError(f"v_sat must be > 0, got {self.v_sat}")


@dataclass(frozen=True)
class DetectorParams:
    eta: float = 0.17
    v1: float = 0.13
    sigma1: float = 0.02
    sigma0: float | None = None
    n_max: int = 7
    quench: Linear | Saturating = field(default_factory=Linear)

    def __post_init__(self):
        if self.sigma0 is None:
            object.__setattr__(self, "sigma0", self.sigma1 / 2.0)
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"eta must be in [0, 1], got {self.eta}")
        if not self.v1 > 0:
            raise ParameterError(f"v1 must be > 0, got {self.v1}")
        if self.sigma1 < 0 or self.sigma0 < 0:
            raise ParameterError("peak widths must be >= 0")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max}")

    def centers(self) -> np.ndarray:
        """Peak centres for k = 0..n_max."""
        k = np.arange(self.n_max + 1, dtype=float)
        if isinstance(self.quench, Saturating):
            vs = self.quench.v_sat
            return vs * -np.expm1(-k * self.v1 / vs)
        return k * self.v1

    def widths(self) -> np.ndarray:
        """Peak standard deviations for k = 0..n_max."""
        k = np.arange(self.n_max + 1, dtype=float)
        w = self.sigma1 * np.sqrt(k)
        w[0] = self.sigma0
        return w

    def to_dict(self) -> dict:
        quench = "linear" if isinstance(self.quench, Linear) else {"v_sat_volts": self.quench.v_sat}
        return {
            "eta": self.eta,
            "v1_volts": self.v1,
            "sigma1_volts": self.sigma1,
            "sigma0_volts": self.sigma0,
            "n_max": self.n_max,
            "quench": quench,
        }


@dataclass(frozen=True)
class Threshold:
    """Click when the avalanche voltage exceeds ``v_t``."""

    v_t: float


@dataclass(frozen=True)
class Window:
    """Click when ``v_lo < v <= v_hi``."""

    v_lo: float
    v_hi: float

    def __post_init__(self):
        if not self.v_lo < self.v_hi:
            raise ParameterError(f"window needs v_lo < v_hi, got ({self.v_lo}, {self.v_hi})")


Discriminator = Threshold | Window


def disc_to_dict(disc: Discriminator) -> dict:
    if isinstance(disc, Threshold):
        return {"kind": "threshold", "v_t_volts": disc.v_t}
    return {"kind": "window", "v_lo_volts": disc.v_lo, "v_hi_volts": disc.v_hi}


def thin(n, eta: float, rng: np.random.Generator):
    """Binomial loss: each of ``n`` photons survives with probability ``eta``."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must be in [0, 1], got {eta}")
    return rng.binomial(n, eta)


def detected_pmf(p: PhotonPmf, eta: float) -> PhotonPmf:
    """Distribution of surviving photons after binomial loss."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must be in [0, 1], got {eta}")
    n = np.arange(p.n_trunc + 1)
    # kernel[k, n] = C(n, k) eta^k (1-eta)^(n-k)
    kernel = binom.pmf(n[:, None], n[None, :], eta)
    return PhotonPmf(kernel @ p.probs, p.tail_mass)


def peak_center(k: int, params: DetectorParams) -> float:
    if not 0 <= k <= params.n_max:
        raise ParameterError(f"photon number {k} outside 0..{params.n_max}")
    return float(params.centers()[k])


def calibrate_saturation(v_linear: float = 0.26, v_observed: float = 0.18) -> float:
    """``v_sat`` such that a linear-model voltage ``v_linear`` maps to ``v_observed``.

    Solves ``v_sat (1 - exp(-v_linear / v_sat)) = v_observed``.
    """
    if not 0 < v_observed < v_linear:
        raise ParameterError("need 0 < v_observed < v_linear")

    def f(vs):
        return vs * -math.expm1(-v_linear / vs) - v_observed

    lo = v_observed * 1e-3
    hi = v_linear
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-14)


def _clamp(k, n_max):
    return np.minimum(k, n_max)


def avalanche_voltage(k, params: DetectorParams, rng: np.random.Generator):
    """Draw avalanche voltages for detected counts ``k`` (scalar or array).

    Counts above ``n_max`` are clamped to the top peak.
    """
    k = np.asarray(k)
    if np.any(k < 0):
        raise ParameterError("photon numbers must be >= 0")
    kc = _clamp(k, params.n_max)
    centers = params.centers()[kc]
    widths = params.widths()[kc]
    v = centers + widths * rng.standard_normal(kc.shape)
    return v if v.ndim else float(v)


def _folded_weights(q: PhotonPmf, n_max: int) -> np.ndarray:
    """Detected-count weights for peaks 0..n_max with the overflow on n_max."""
    w = np.zeros(n_max + 1)
    m = min(n_max, q.n_trunc)
    w[:m] = q.probs[:m]
    w[m] += q.probs[m:].sum()
    return w


def avalanche_density(p: PhotonPmf, params: DetectorParams, grid) -> np.ndarray:
    """Model avalanche-voltage density on ``grid`` (1/volts).

    Zero-width peaks have no pointwise density; their mass is deposited in
    the grid cell containing the peak centre instead.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be strictly increasing with >= 2 points")
    w = _folded_weights(detected_pmf(p, params.eta), params.n_max)
    centers = params.centers()
    widths = params.widths()
    out = np.zeros_like(grid)
    # cell edges at midpoints; outer cells are half-width
    edges = np.concatenate(([grid[0]], 0.5 * (grid[1:] + grid[:-1]), [grid[-1]]))
    for wk, c, s in zip(w, centers, widths):
        if wk == 0.0:
            continue
        if s > 0:
            out += wk * np.exp(-0.5 * ((grid - c) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        elif grid[0] <= c <= grid[-1]:
            i = min(np.searchsorted(edges, c, side="right") - 1, grid.size - 1)
            out[i] += wk / (edges[i + 1] - edges[i])
    return out


def _mass_above(v_t: float, centers: np.ndarray, widths: np.ndarray) -> np.ndarray:
    # P(V > v_t) per peak via the complementary normal CDF
    out = np.empty_like(centers)
    pos = widths > 0
    out[pos] = ndtr((centers[pos] - v_t) / widths[pos])
    out[~pos] = (centers[~pos] > v_t).astype(float)
    return out


def peak_click_masses(params: DetectorParams, disc: Discriminator) -> np.ndarray:
    """Probability of a click given each detected count k = 0..n_max."""
    centers, widths = params.centers(), params.widths()
    if isinstance(disc, Threshold):
        return _mass_above(disc.v_t, centers, widths)
    return _mass_above(disc.v_lo, centers, widths) - _mass_above(disc.v_hi, centers, widths)


def click_probability(p: PhotonPmf, params: DetectorParams, disc: Discriminator) -> float:
    """Probability that a pulse with photon distribution ``p`` produces a click."""
    w = _folded_weights(detected_pmf(p, params.eta), params.n_max)
    return float(np.dot(w, peak_click_masses(params, disc)))


def crossover_voltages(density_a: np.ndarray, density_b: np.ndarray, grid) -> np.ndarray:
    """Voltages where two density curves on the same grid cross (linear interpolation)."""
    grid = np.asarray(grid, dtype=float)
    d = np.asarray(density_a) - np.asarray(density_b)
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    t = d[idx] / (d[idx] - d[idx + 1])
    return grid[idx] + t * (grid[idx + 1] - grid[idx])
