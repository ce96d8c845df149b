"""Photon-number statistics of pulsed light sources.

Three source classes are supported: coherent (Poisson), single-mode chaotic
(thermal, Bose-Einstein) and a coherent field superposed on a chaotic field.
The last one interpolates between the other two and is parameterized either
by its two means ``(mu_s, mu_n)`` or by the measurable pair ``(mu, g2)``.

Besides the counting distributions this module provides factorial moments
``<a^dag^k a^k>`` and a semiclassical intensity sampler. Drawing
``n ~ Poisson(W)`` with ``W`` from :func:`sample_pulse_intensity` reproduces
:func:`pmf` exactly, which is what the Monte Carlo engine relies on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln
from scipy.stats import poisson

TAIL_TOL = 1e-9
N_TRUNC_CAP = 256


class ParameterError(ValueError):
    """A source or detector parameter lies outside its domain."""


class InfeasibleSourceError(ParameterError):
    """Requested statistics cannot be represented by the source model."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SourceSpec:
    """Photon statistics of a source.

    ``kind`` is one of ``"poisson"``, ``"thermal"`` or ``"mix"``. Use the
    constructors :meth:`poisson`, :meth:`thermal`, :meth:`mix` and
    :meth:`from_mu_g2` rather than filling the fields by hand.
    """

    kind: str
    mu_s: float = 0.0
    mu_n: float = 0.0

    def __post_init__(self):
        if self.kind not in ("poisson", "thermal", "mix"):
            raise ParameterError(f"unknown source kind {self.kind!r}")
        for name in ("mu_s", "mu_n"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {v}")
        if self.kind == "poisson" and self.mu_n != 0:
            raise ParameterError("poisson source has no chaotic part")
        if self.kind == "thermal" and self.mu_s != 0:
            raise ParameterError("thermal source has no coherent part")

    @classmethod
    def poisson(cls, mu: float) -> "SourceSpec":
        return cls("poisson", mu_s=float(mu))

    @classmethod
    def thermal(cls, mu: float) -> "SourceSpec":
        return cls("thermal", mu_n=float(mu))

    @classmethod
    def mix(cls, mu_s: float, mu_n: float) -> "SourceSpec":
        return cls("mix", mu_s=float(mu_s), mu_n=float(mu_n))

    @classmethod
    def from_mu_g2(cls, mu: float, g2: float) -> "SourceSpec":
        return cls.mix(*mix_from_mu_g2(mu, g2))

    @property
    def mu(self) -> float:
        return self.mu_s + self.mu_n

    def to_dict(self) -> dict:
        if self.kind == "poisson":
            return {"kind": "poisson", "mu": self.mu_s}
        if self.kind == "thermal":
            return {"kind": "thermal", "mu": self.mu_n}
        return {"kind": "mix", "mu_s": self.mu_s, "mu_n": self.mu_n}


@dataclass(frozen=True)
class PhotonPmf:
    """Truncated photon-number distribution.

    ``probs[n]`` is p(n) for n = 0..n_trunc; ``tail_mass`` bounds the
    probability of all larger photon numbers from above.
    """

    probs: np.ndarray
    tail_mass: float = 0.0

    @property
    def n_trunc(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))


def mix_from_mu_g2(mu: float, g2: float) -> tuple[float, float]:
    """Split a total mean ``mu`` into coherent and chaotic parts.

    Solves ``mu = mu_s + mu_n`` and ``g2 = mu_n (mu_n + 2 mu_s) / mu**2 + 1``
    taking the root with ``mu_n <= mu``.
    """
    if not (math.isfinite(mu) and mu > 0):
        raise ParameterError(f"mu must be > 0, got {mu}")
    if not (1.0 <= g2 <= 2.0):
        raise InfeasibleSourceError(
            f"g2={g2} outside [1, 2]: not representable as coherent + chaotic light"
        )
    mu_n = mu * (1.0 - math.sqrt(2.0 - g2))
    mu_s = mu - mu_n
    return mu_s, mu_n


def _log_pgf(source: SourceSpec, s: float) -> float:
    # ln E[s^N] for the coherent+chaotic family; valid while mu_n (s-1) < 1
    d = 1.0 - source.mu_n * (s - 1.0)
    return source.mu_s * (s - 1.0) / d - math.log(d)


def chernoff_tail(source: SourceSpec, n: int) -> float:
    """Upper bound on P(N >= n) from the probability generating function."""
    if n <= source.mu:
        return 1.0
    s_hi = 1.0 + (1.0 / source.mu_n if source.mu_n > 0 else max(50.0, 10.0 * n))
    # bound is min over s>1 of G(s)/s^n; optimize in log space
    def f(s):
        return _log_pgf(source, s) - n * math.log(s)

    res = minimize_scalar(
        f, bounds=(1.0 + 1e-12, s_hi - 1e-9 * (s_hi - 1.0)), method="bounded",
        options={"xatol": 1e-10},
    )
    return min(1.0, math.exp(res.fun))


def default_n_trunc(source: SourceSpec, tol: float = TAIL_TOL) -> int:
    n = max(1, int(math.ceil(source.mu)))
    while n < N_TRUNC_CAP and chernoff_tail(source, n + 1) >= tol:
        n += 1
    return n


def _mix_probs(mu_s: float, mu_n: float, n_trunc: int) -> np.ndarray:
    """Coherent+chaotic counting distribution.

    p(n) = mu_n^n / (1+mu_n)^(n+1) exp(-mu_s/(1+mu_n)) L_n(-mu_s/(mu_n (1+mu_n)))

    The Laguerre polynomial is run through its three-term recurrence with
    the factor (mu_n/(1+mu_n))^n folded in, which stays finite as mu_n -> 0
    (where it collapses to the Poisson recursion).
    """
    r = mu_n / (1.0 + mu_n)
    c = mu_s / (1.0 + mu_n) ** 2
    y = np.empty(n_trunc + 1)
    y[0] = 1.0
    if n_trunc >= 1:
        y[1] = r + c
    for n in range(1, n_trunc):
        y[n + 1] = ((2 * n + 1) * r * y[n] + c * y[n] - n * r * r * y[n - 1]) / (n + 1)
    return y * math.exp(-mu_s / (1.0 + mu_n)) / (1.0 + mu_n)


def pmf(source: SourceSpec, n_trunc: int | None = None) -> PhotonPmf:
    """Photon-number distribution truncated at ``n_trunc``.

    When ``n_trunc`` is omitted the smallest truncation whose tail bound is
    below 1e-9 is used (capped at 256).
    """
    if n_trunc is None:
        n_trunc = default_n_trunc(source)
    if n_trunc < 1:
        raise ParameterError(f"n_trunc must be >= 1, got {n_trunc}")
    n = np.arange(n_trunc + 1)
    if source.kind == "poisson":
        mu = source.mu_s
        if mu == 0:
            probs = (n == 0).astype(float)
        else:
            probs = poisson.pmf(n, mu)
    elif source.kind == "thermal":
        mu = source.mu_n
        probs = (mu / (1.0 + mu)) ** n / (1.0 + mu)
    else:
        probs = _mix_probs(source.mu_s, source.mu_n, n_trunc)
    tail = chernoff_tail(source, n_trunc + 1)
    if tail >= TAIL_TOL:
        warnings.warn(
            f"truncation at n={n_trunc} leaves tail mass up to {tail:.3g}",
            TruncationWarning,
            stacklevel=2,
        )
    return PhotonPmf(np.asarray(probs, dtype=float), tail)


def factorial_moment(source: SourceSpec, k: int) -> float:
    """Normally ordered moment ``<a^dag^k a^k> = E[N!/(N-k)!]``.

    Closed forms: ``mu^k`` (Poisson), ``k! mu^k`` (thermal) and
    ``k! sum_j C(k,j) mu_s^j mu_n^(k-j) / j!`` for the mixture.
    """
    if k < 0:
        raise ParameterError(f"order must be >= 0, got {k}")
    if k == 0:
        return 1.0
    if source.kind == "poisson":
        return source.mu_s**k
    if source.kind == "thermal":
        return math.factorial(k) * source.mu_n**k
    total = 0.0
    for j in range(k + 1):
        total += math.comb(k, j) * source.mu_s**j * source.mu_n ** (k - j) / math.factorial(j)
    return math.factorial(k) * total


def brute_force_moment(source: SourceSpec, k: int, n_trunc: int) -> float:
    """``sum_n n!/(n-k)! p(n)`` over the pmf truncated at ``n_trunc``."""
    p = pmf(source, n_trunc).probs
    n = np.arange(k, n_trunc + 1)
    falling = np.exp(gammaln(n + 1) - gammaln(n - k + 1))
    return float(np.dot(falling, p[k:]))


def sample_pulse_intensity(source: SourceSpec, rng: np.random.Generator, size=None):
    """Per-pulse mean photon number W of the semiclassical intensity.

    Poisson: W = mu. Thermal: exponential with mean mu. Mixture:
    ``W = |sqrt(mu_s) + z|^2`` with z circular complex Gaussian,
    ``E|z|^2 = mu_n``.
    """
    if source.kind == "poisson":
        if size is None:
            return source.mu_s
        return np.full(size, source.mu_s)
    if source.kind == "thermal":
        return rng.exponential(source.mu_n, size) if source.mu_n > 0 else (
            0.0 if size is None else np.zeros(size)
        )
    scale = math.sqrt(source.mu_n / 2.0)
    re = math.sqrt(source.mu_s) + scale * rng.standard_normal(size)
    im = scale * rng.standard_normal(size)
    return re * re + im * im
