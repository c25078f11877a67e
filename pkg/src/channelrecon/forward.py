"""Forward model for photocounting through a lossy bosonic channel.

A run is described by a truncated photon-number distribution of the noise
process, a channel scenario (single-photon probe weight and channel
transmittance) and a detection plan (a set of calibrated attenuation
settings in front of one detector).  The forward map is: mix the probe
photon into the noise law, then apply binomial loss at each setting's
total efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Entries may stray from [0, 1] by at most this much before validation fails.
ENTRY_SLACK = 1e-12
# Probability vectors must sum to 1 within this tolerance.
NORM_TOL = 1e-9

NOISE_KINDS = ("poisson", "thermal")


def as_probs(dist) -> np.ndarray:
    """Coerce a distribution object or array-like to a float array."""
    probs = getattr(dist, "probs", dist)
    return np.asarray(probs, dtype=float)


def _validated_probs(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D probability vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if arr.min() < -ENTRY_SLACK or arr.max() > 1.0 + ENTRY_SLACK:
        raise ValueError(f"{name} has entries outside [0, 1]")
    total = float(arr.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"{name} must sum to 1 within {NORM_TOL:g}, got {total!r}")
    out = np.clip(arr, 0.0, 1.0)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class NoiseDistribution:
    """Photon-number law of the noise process on support 0..cutoff.

    ``tail_mass`` records probability discarded when a law with infinite
    support was truncated and renormalized to this window.
    """

    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "probs", _validated_probs(self.probs, "probs"))
        if not 0.0 <= self.tail_mass < 1.0:
            raise ValueError(f"tail_mass must be in [0, 1), got {self.tail_mass!r}")

    @property
    def cutoff(self) -> int:
        """Largest photon number carried by this law."""
        return self.probs.size - 1


@dataclass(frozen=True, eq=False)
class MixedDistribution:
    """Photon-number law after mixing the probe photon into the noise."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _validated_probs(self.probs, "probs"))

    @property
    def cutoff(self) -> int:
        return self.probs.size - 1


@dataclass(frozen=True, eq=False)
class PhotocountDistribution:
    """Detector click-number law at one efficiency setting."""

    probs: np.ndarray
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "probs", _validated_probs(self.probs, "probs"))
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta!r}")

    @property
    def kmax(self) -> int:
        return self.probs.size - 1


@dataclass(frozen=True)
class ChannelScenario:
    """Probe weight and transmittance of the channel under test.

    xi is the probability that the heralded probe photon was actually
    injected into the channel; tau_ch is the channel transmittance.
    """

    xi: float
    tau_ch: float

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi must be in [0, 1], got {self.xi!r}")
        if not 0.0 <= self.tau_ch <= 1.0:
            raise ValueError(f"tau_ch must be in [0, 1], got {self.tau_ch!r}")


@dataclass(frozen=True)
class DetectionPlan:
    """Calibrated attenuation settings sharing one detection efficiency.

    Setting i measures with total efficiency eta_i = eta_tot * settings[i].
    eta_det and gamma optionally record how eta_tot factors into detector
    efficiency and constant optical losses; when both are given they must
    reproduce eta_tot.
    """

    eta_tot: float
    settings: tuple[float, ...]
    eta_det: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(float(t) for t in self.settings))
        if not 0.0 < self.eta_tot <= 1.0:
            raise ValueError(f"eta_tot must be in (0, 1], got {self.eta_tot!r}")
        if len(self.settings) == 0:
            raise ValueError("settings must contain at least one attenuation value")
        for tau in self.settings:
            if not 0.0 < tau <= 1.0:
                raise ValueError(f"attenuation settings must lie in (0, 1], got {tau!r}")
        if len(set(self.settings)) != len(self.settings):
            raise ValueError("attenuation settings must be distinct")
        if self.eta_det is not None and not 0.0 < self.eta_det <= 1.0:
            raise ValueError(f"eta_det must be in (0, 1], got {self.eta_det!r}")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma!r}")
        if self.eta_det is not None and self.gamma is not None:
            if abs(self.gamma * self.eta_det - self.eta_tot) > 1e-9:
                raise ValueError(
                    "gamma * eta_det must reproduce eta_tot "
                    f"({self.gamma!r} * {self.eta_det!r} != {self.eta_tot!r})"
                )

    @property
    def efficiencies(self) -> np.ndarray:
        """Total efficiency eta_i of every setting, in plan order."""
        return self.eta_tot * np.asarray(self.settings, dtype=float)

    def __len__(self) -> int:
        return len(self.settings)


@lru_cache(maxsize=8)
def _binom_table(n_max: int) -> np.ndarray:
    """Table of binomial coefficients C[m, k] for m, k <= n_max.

    Built with the multiplicative row recurrence, which stays accurate in
    floating point well past the exact-integer range (no factorials).
    """
    table = np.zeros((n_max + 1, n_max + 1))
    table[:, 0] = 1.0
    for m in range(1, n_max + 1):
        row = table[m]
        for k in range(1, m + 1):
            row[k] = row[k - 1] * (m - k + 1) / k
    table.flags.writeable = False
    return table


def thinning_matrix(q: float, m_max: int, k_max: int | None = None) -> np.ndarray:
    """Binomial loss matrix T with T[k, m] = C(m, k) q^k (1-q)^(m-k).

    Columns are binomial laws B(m, q), so each column of the full matrix
    (k_max >= m_max) sums to 1.  Rows above m_max are zero.

    Args:
        q: survival probability per photon, in [0, 1].
        m_max: largest input photon number (columns 0..m_max).
        k_max: largest output click number (rows 0..k_max); defaults to m_max.

    Returns:
        Array of shape (k_max + 1, m_max + 1).
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"survival probability q must be in [0, 1], got {q!r}")
    if k_max is None:
        k_max = m_max
    table = _binom_table(max(m_max, k_max))
    k = np.arange(k_max + 1)[:, np.newaxis]
    m = np.arange(m_max + 1)[np.newaxis, :]
    # Clip the exponent so q = 1 does not raise 0 to a negative power in
    # entries that get masked out anyway.
    expo = np.maximum(m - k, 0)
    values = table[m, k] * np.power(q, k) * np.power(1.0 - q, expo)
    return np.where(m >= k, values, 0.0)


def mixing_matrix(xi: float, cutoff: int) -> np.ndarray:
    """Linear map sending a noise law on 0..cutoff to the mixed law on 0..cutoff+1."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must be in [0, 1], got {xi!r}")
    out = np.zeros((cutoff + 2, cutoff + 1))
    idx = np.arange(cutoff + 1)
    out[idx, idx] = 1.0 - xi
    out[idx + 1, idx] = xi
    return out


def mix_source_noise(noise, xi: float) -> MixedDistribution:
    """Mix a single probe photon of weight xi into the noise law.

    The result on support 0..cutoff+1 is
    p(m) = xi * b(m-1) + (1 - xi) * b(m), with b taken as zero outside
    its support.
    """
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must be in [0, 1], got {xi!r}")
    b = as_probs(noise)
    p = np.zeros(b.size + 1)
    p[:-1] += (1.0 - xi) * b
    p[1:] += xi * b
    return MixedDistribution(p)


def binomial_thinning(dist, q: float) -> np.ndarray:
    """Pass each photon independently with probability q.

    Maps a law p on 0..M to the law of survivors on the same support:
    sum_m C(m, k) q^k (1-q)^(m-k) p(m).

    Args:
        dist: photon-number probabilities (array-like or distribution object).
        q: per-photon survival probability in [0, 1].

    Returns:
        Thinned probabilities, same length as the input.
    """
    p = as_probs(dist)
    matrix = thinning_matrix(q, p.size - 1)
    return matrix @ p


def forward_photocounts(noise, scenario: ChannelScenario, plan: DetectionPlan) -> tuple[PhotocountDistribution, ...]:
    """Exact photocount laws for every setting of a detection plan.

    Mixes the probe into the noise once, then thins with survival
    probability tau_ch * eta_i per setting.

    Returns:
        One PhotocountDistribution per plan setting, in plan order.
    """
    mixed = mix_source_noise(noise, scenario.xi)
    out = []
    for eta in plan.efficiencies:
        probs = binomial_thinning(mixed, scenario.tau_ch * float(eta))
        out.append(PhotocountDistribution(probs, eta=float(eta)))
    return tuple(out)


def poisson_noise(mu: float, cutoff: int) -> NoiseDistribution:
    """Poisson photon-number law with mean mu, truncated at cutoff.

    The truncated vector is renormalized; the discarded mass is recorded
    on the returned distribution.
    """
    if mu < 0.0:
        raise ValueError(f"mu must be non-negative, got {mu!r}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff!r}")
    probs = np.zeros(cutoff + 1)
    probs[0] = math.exp(-mu)
    for m in range(1, cutoff + 1):
        probs[m] = probs[m - 1] * mu / m
    kept = float(probs.sum())
    return NoiseDistribution(probs / kept, tail_mass=max(0.0, 1.0 - kept))


def thermal_noise(mu: float, cutoff: int) -> NoiseDistribution:
    """Bose-Einstein photon-number law with mean mu, truncated at cutoff.

    b(m) is proportional to mu^m / (1 + mu)^(m+1) before renormalization.
    """
    if mu < 0.0:
        raise ValueError(f"mu must be non-negative, got {mu!r}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff!r}")
    probs = np.zeros(cutoff + 1)
    probs[0] = 1.0 / (1.0 + mu)
    ratio = mu / (1.0 + mu)
    for m in range(1, cutoff + 1):
        probs[m] = probs[m - 1] * ratio
    kept = float(probs.sum())
    return NoiseDistribution(probs / kept, tail_mass=max(0.0, 1.0 - kept))


_TRUNCATION_HARD_CAP = 100_000


def truncation_bound(kind: str, mu: float, epsilon: float) -> int:
    """Smallest cutoff M whose discarded tail mass is below epsilon.

    Args:
        kind: "poisson" or "thermal".
        mu: mean photon number of the untruncated law.
        epsilon: tail-mass tolerance, in (0, 1).

    Returns:
        The minimal M such that the law's mass above M is < epsilon.
    """
    if kind not in NOISE_KINDS:
        raise ValueError(f"kind must be one of {NOISE_KINDS}, got {kind!r}")
    if mu < 0.0:
        raise ValueError(f"mu must be non-negative, got {mu!r}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon!r}")
    if kind == "poisson":
        term = math.exp(-mu)
        ratio = lambda m: mu / m  # noqa: E731 - tiny local helper
    else:
        term = 1.0 / (1.0 + mu)
        ratio = lambda m: mu / (1.0 + mu)  # noqa: E731
    tail = 1.0 - term
    m = 0
    while tail >= epsilon:
        m += 1
        if m > _TRUNCATION_HARD_CAP:
            raise ValueError(
                f"no cutoff below {_TRUNCATION_HARD_CAP} reaches tail mass {epsilon!r} "
                f"for kind={kind!r}, mu={mu!r}"
            )
        term *= ratio(m)
        tail -= term
    return m
