"""Closed-form and enumerated correlation quantities.

Everything here is deterministic and serves two purposes: evaluating the
normalized correlations g(n) and the higher-order coincidence
gamma(n1+n2) = g(n1+n2) / (g(n1) g(n2)) directly, and providing exact
click and coincidence probabilities against which the Monte Carlo engine
is checked.

Pulse intensities of non-Poisson sources are averaged by product
quadrature: Gauss-Laguerre in the chaotic power and the periodic trapezoid
rule in its phase relative to the coherent amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammainc, gammaln, roots_laguerre
from scipy.stats import poisson

from .detector_model import (
    DetectorParams,
    Discriminator,
    Threshold,
    peak_click_masses,
)
from .source_models import (
    ParameterError,
    PhotonPmf,
    SourceSpec,
    factorial_moment,
    pmf,
)

QUAD_RTOL = 1e-8
QUAD_MAX_NODES = 512


class UndefinedCorrelationError(ArithmeticError):
    """Normalized correlation requested for a source with zero mean."""


class InsufficientSignalError(ArithmeticError):
    """Zero singles probability or zero accidental counts."""


class NumericConvergenceError(ArithmeticError):
    pass


def g_order(source: SourceSpec, n: int, moment=factorial_moment) -> float:
    """Normalized n-th order correlation ``<a^dag^n a^n> / <a^dag a>^n``.

    ``moment(source, k)`` supplies the factorial moments; swap in a
    brute-force sum to get an independent evaluation.
    """
    if n < 1:
        raise ParameterError(f"order must be >= 1, got {n}")
    mu = moment(source, 1)
    if mu == 0:
        raise UndefinedCorrelationError("g(n) undefined for a source with zero mean")
    return moment(source, n) / mu**n


def gamma_window(source: SourceSpec, n1: int, n2: int, moment=factorial_moment) -> float:
    """Higher-order coincidence for window discriminators on n1 and n2 photons."""
    if n1 < 1 or n2 < 1:
        raise ParameterError("window photon numbers must be >= 1")
    g = lambda n: g_order(source, n, moment)  # noqa: E731
    return g(n1 + n2) / (g(n1) * g(n2))


def gamma_threshold(
    source: SourceSpec,
    eta1: float,
    eta2: float,
    n1_min: int,
    n2_min: int,
    n_max: int,
    moment=factorial_moment,
) -> float:
    """Higher-order coincidence for threshold discriminators.

    Numerator and denominator sum the window quantities over
    ``n_i in [n_i_min, n_max]`` weighted by ``eta1**n1 * eta2**n2``.
    """
    if not (1 <= n1_min <= n_max and 1 <= n2_min <= n_max):
        raise ParameterError(
            f"empty summation range: n1_min={n1_min}, n2_min={n2_min}, n_max={n_max}"
        )
    mu = moment(source, 1)
    if mu == 0:
        raise UndefinedCorrelationError("gamma undefined for a source with zero mean")
    # normalize by mu^k so large n_max stays in floating range
    G = [moment(source, k) / mu**k for k in range(2 * n_max + 1)]
    num = den = 0.0
    for n1 in range(n1_min, n_max + 1):
        for n2 in range(n2_min, n_max + 1):
            w = (eta1 * mu) ** n1 * (eta2 * mu) ** n2
            num += G[n1 + n2] * w
            den += G[n1] * G[n2] * w
    if den == 0:
        raise InsufficientSignalError("all summation weights vanish (zero efficiency?)")
    return num / den


def gamma_from_clicks(p_coinc: float, p1: float, p2: float) -> float:
    if not p1 * p2 > 0:
        raise InsufficientSignalError("singles probabilities must be positive")
    return p_coinc / (p1 * p2)


# -- intensity quadrature


@lru_cache(maxsize=16)
def _laguerre(m: int):
    return roots_laguerre(m)


def _intensity_nodes(source: SourceSpec, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes W and weights for averages over the pulse intensity."""
    if source.kind == "poisson" or source.mu_n == 0:
        return np.array([source.mu]), np.array([1.0])
    u, wu = _laguerre(m)
    if source.mu_s == 0:
        return source.mu_n * u, wu
    # W = mu_s + mu_n u + 2 sqrt(mu_s mu_n u) cos(theta); theta on [0, pi] by symmetry
    n_theta = m
    theta = (np.arange(n_theta) + 0.5) * math.pi / n_theta
    r = np.sqrt(source.mu_n * u)
    W = source.mu_s + r[:, None] ** 2 + 2 * math.sqrt(source.mu_s) * r[:, None] * np.cos(theta)
    w = wu[:, None] * np.full(n_theta, 1.0 / n_theta)
    return np.maximum(W.ravel(), 0.0), w.ravel()


def intensity_average(source: SourceSpec, fn, m0: int = 16):
    """E_W[fn(W)] with node doubling until the relative change is below 1e-8.

    ``fn`` maps an array of intensities (shape ``(M,)``) to an array whose last
    axis runs over the nodes.
    """
    W, w = _intensity_nodes(source, m0)
    prev = fn(W) @ w
    if W.size == 1:
        return prev
    m = m0
    while m < QUAD_MAX_NODES:
        m *= 2
        W, w = _intensity_nodes(source, m)
        cur = fn(W) @ w
        scale = np.maximum(np.abs(cur), np.max(np.abs(cur)) * 1e-300)
        if np.all(np.abs(cur - prev) <= QUAD_RTOL * scale + 1e-300):
            return cur
        prev = cur
    raise NumericConvergenceError(
        f"intensity quadrature did not converge to {QUAD_RTOL} with {QUAD_MAX_NODES} nodes"
    )


def _arm_click_given_intensity(lam_scale: float, masses: np.ndarray, W: np.ndarray) -> np.ndarray:
    """P(click | W) for an arm detecting Poisson(lam_scale * W) photons."""
    n_max = masses.size - 1
    lam = lam_scale * W
    k = np.arange(n_max)[:, None]
    below = poisson.pmf(k, lam[None, :]) if n_max else np.zeros((0, lam.size))
    top = gammainc(n_max, lam) if lam_scale > 0 else np.zeros_like(lam)
    return masses[:n_max] @ below + masses[n_max] * top


def joint_click_probability(
    source: SourceSpec,
    det1: DetectorParams,
    det2: DetectorParams,
    disc1: Discriminator,
    disc2: Discriminator,
    split: float = 0.5,
) -> tuple[float, float, float]:
    """Same-pulse coincidence and singles probabilities ``(P_coinc, P1, P2)``.

    Conditional on the pulse intensity W the two arms detect independent
    Poisson counts with means ``eta1 split W`` and ``eta2 (1-split) W``.
    """
    if not 0 < split < 1:
        raise ParameterError(f"split must be in (0, 1), got {split}")
    m1 = peak_click_masses(det1, disc1)
    m2 = peak_click_masses(det2, disc2)
    a = det1.eta * split
    b = det2.eta * (1.0 - split)

    def fn(W):
        f1 = _arm_click_given_intensity(a, m1, W)
        f2 = _arm_click_given_intensity(b, m2, W)
        return np.stack([f1 * f2, f1, f2])

    pc, p1, p2 = intensity_average(source, fn)
    return float(pc), float(p1), float(p2)


def joint_count_pmf(
    source: SourceSpec,
    a: float,
    b: float,
    k_max: int,
    method: str = "quadrature",
    n_trunc: int | None = None,
) -> np.ndarray:
    """Joint distribution P(k1, k2) of detected counts in the two arms.

    ``a`` and ``b`` are the per-photon probabilities of being detected in arm
    1 and arm 2 (beamsplitter times efficiency). ``method="quadrature"``
    averages the conditionally independent Poisson pair over the intensity;
    ``method="enumeration"`` sums the multinomial split of the truncated
    photon-number distribution. The two routes are independent.
    """
    if a < 0 or b < 0 or a + b > 1:
        raise ParameterError("need a, b >= 0 and a + b <= 1")
    k = np.arange(k_max + 1)
    if method == "quadrature":
        def fn(W):
            p1 = poisson.pmf(k[:, None], a * W[None, :])
            p2 = poisson.pmf(k[:, None], b * W[None, :])
            return p1[:, None, :] * p2[None, :, :]

        return intensity_average(source, fn)
    if method != "enumeration":
        raise ParameterError(f"unknown method {method!r}")
    p = pmf(source, n_trunc)
    c = 1.0 - a - b
    out = np.zeros((k_max + 1, k_max + 1))
    with np.errstate(divide="ignore"):
        la, lb, lc = np.log(a), np.log(b), np.log(c)
    for n, pn in enumerate(p.probs):
        if pn == 0:
            continue
        k1, k2 = np.meshgrid(k[k <= n], k[k <= n], indexing="ij")
        rest = n - k1 - k2
        ok = rest >= 0
        logt = np.full(k1.shape, -np.inf)
        r = rest[ok]
        logt[ok] = (
            gammaln(n + 1) - gammaln(k1[ok] + 1) - gammaln(k2[ok] + 1) - gammaln(r + 1)
            + np.where(k1[ok] > 0, k1[ok] * la, 0.0)
            + np.where(k2[ok] > 0, k2[ok] * lb, 0.0)
            + np.where(r > 0, r * lc, 0.0)
        )
        out[: k1.shape[0], : k1.shape[1]] += pn * np.exp(logt)
    return out


# -- sweeps


MODES = ("window", "threshold", "voltage")


@dataclass
class GammaCurve:
    """gamma versus the detector-2 discrimination setting.

    Settings are photon numbers for ``window`` and ``threshold`` modes and
    volts for ``voltage`` mode.
    """

    mode: str
    points: list[tuple[float, float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def settings(self) -> np.ndarray:
        return np.array([s for s, _ in self.points])

    @property
    def gammas(self) -> np.ndarray:
        return np.array([g for _, g in self.points])


def sweep_gamma(
    source: SourceSpec,
    det1: DetectorParams,
    det2: DetectorParams,
    fixed,
    grid,
    mode: str = "threshold",
    split: float = 0.5,
) -> GammaCurve:
    """Evaluate gamma along a grid of detector-2 settings.

    ``fixed`` is the detector-1 setting: a photon number for the
    ``window``/``threshold`` modes, a :class:`Discriminator` (or a threshold
    voltage) for ``voltage`` mode.
    """
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    grid = sorted(grid)
    if not grid:
        raise ParameterError("empty sweep grid")
    points = []
    if mode == "window":
        for n2 in grid:
            points.append((n2, gamma_window(source, int(fixed), int(n2))))
    elif mode == "threshold":
        n_max = min(det1.n_max, det2.n_max)
        for n2 in grid:
            g = gamma_threshold(source, det1.eta, det2.eta, int(fixed), int(n2), n_max)
            points.append((n2, g))
    else:
        disc1 = fixed if not isinstance(fixed, (int, float)) else Threshold(float(fixed))
        for v in grid:
            pc, p1, p2 = joint_click_probability(source, det1, det2, disc1, Threshold(v), split)
            points.append((v, gamma_from_clicks(pc, p1, p2)))
    return GammaCurve(mode, points, {"x_axis_convention": "reciprocal" if mode != "voltage" else "linear"})
