"""Monte Carlo photocounting runs with reproducible per-setting streams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forward import (
    ChannelScenario,
    DetectionPlan,
    NoiseDistribution,
    PhotocountDistribution,
    forward_photocounts,
)

# Identity of the generator recorded in dataset provenance.  Streams are
# drawn from numpy's PCG64; the per-setting stream is seeded with
# (run seed, IEEE-754 bit pattern of the setting's attenuation), so a
# setting's histogram does not depend on where it sits in the plan or on
# evaluation order.
RNG_NAME = "numpy-pcg64"

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to generate one synthetic run."""

    scenario: ChannelScenario
    noise: NoiseDistribution
    plan: DetectionPlan
    shots_per_setting: int
    seed: int

    def __post_init__(self):
        if len(self.plan) < 2:
            raise ValueError("plan must contain at least two settings")
        if self.shots_per_setting < 1:
            raise ValueError(
                f"shots_per_setting must be at least 1, got {self.shots_per_setting!r}"
            )
        if not 0 <= self.seed < _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class SettingRecord:
    """Observed click histogram of a single efficiency setting."""

    eta: float
    counts: tuple[int, ...]
    shots: int

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta!r}")
        if len(self.counts) == 0:
            raise ValueError("counts must not be empty")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")
        if sum(self.counts) != self.shots:
            raise ValueError(
                f"counts sum to {sum(self.counts)} but shots is {self.shots}"
            )

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.shots


@dataclass(frozen=True)
class EmpiricalDataset:
    """Histograms of one run, plus provenance of how they were produced.

    ``source`` names the file a loaded dataset came from and is excluded
    from equality so a round-tripped dataset compares equal to the
    original.
    """

    records: tuple[SettingRecord, ...]
    seed: int | None = None
    rng: str = RNG_NAME
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if len(self.records) == 0:
            raise ValueError("dataset must contain at least one setting record")

    @property
    def efficiencies(self) -> np.ndarray:
        return np.asarray([r.eta for r in self.records], dtype=float)

    @property
    def kmax(self) -> int:
        """Largest click number carried by any record."""
        return max(len(r.counts) for r in self.records) - 1

    def __len__(self) -> int:
        return len(self.records)


def empirical_probabilities(counts, shots: int) -> np.ndarray:
    """Relative frequencies of a click histogram.

    Args:
        counts: non-negative integer histogram over k = 0, 1, ...
        shots: total number of pulses; must equal the histogram sum.
    """
    arr = np.asarray(counts)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("counts must be a non-empty 1-D histogram")
    if np.any(arr < 0):
        raise ValueError("counts must be non-negative")
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots!r}")
    total = int(arr.sum())
    if total != shots:
        raise ValueError(f"counts sum to {total} but shots is {shots}")
    return arr.astype(float) / shots


def sample_photocounts(dist, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a click histogram from an exact photocount law.

    Uses inverse-CDF sampling over the finite support, so the result is a
    pure function of the generator state.

    Args:
        dist: PhotocountDistribution or probability array.
        shots: number of pulses to draw (>= 1).
        rng: generator in a caller-controlled state.

    Returns:
        Integer histogram over the full support of ``dist``.
    """
    probs = dist.probs if isinstance(dist, PhotocountDistribution) else np.asarray(dist, dtype=float)
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots!r}")
    cdf = np.cumsum(probs)
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    # Guard the (sum slightly below 1) edge so a draw above the last CDF
    # value lands in the top bin instead of out of range.
    np.clip(draws, 0, probs.size - 1, out=draws)
    return np.bincount(draws, minlength=probs.size)


def setting_stream(seed: int, attenuation: float) -> np.random.Generator:
    """Independent generator for one attenuation setting of a run."""
    key = int(np.float64(attenuation).view(np.uint64))
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, key)))


def simulate_run(config: SimulationConfig) -> EmpiricalDataset:
    """Generate one full synthetic run.

    Computes the exact photocount law of every setting, then samples each
    histogram from that setting's own stream.  Results depend only on the
    configuration, never on evaluation order.
    """
    pis = forward_photocounts(config.noise, config.scenario, config.plan)
    records = []
    for attenuation, pi in zip(config.plan.settings, pis):
        rng = setting_stream(config.seed, attenuation)
        counts = sample_photocounts(pi, config.shots_per_setting, rng)
        records.append(
            SettingRecord(eta=pi.eta, counts=tuple(int(c) for c in counts), shots=config.shots_per_setting)
        )
    return EmpiricalDataset(records=tuple(records), seed=config.seed, rng=RNG_NAME)
