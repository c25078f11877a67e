"""Quality figures for reconstructed distributions and raw data checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .forward import as_probs

_NORM_TOL = 1e-6


def _padded_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad two probability vectors to a common length."""
    pa = as_probs(a)
    pb = as_probs(b)
    n = max(pa.size, pb.size)
    if pa.size < n:
        pa = np.concatenate([pa, np.zeros(n - pa.size)])
    if pb.size < n:
        pb = np.concatenate([pb, np.zeros(n - pb.size)])
    return pa, pb


def fidelity(a, b) -> float:
    """Bhattacharyya overlap sum(sqrt(a_m * b_m)) of two distributions.

    Shorter inputs are zero-padded; both must be normalized within 1e-6.
    Equals 1 exactly when the distributions coincide.
    """
    pa, pb = _padded_pair(a, b)
    for name, vec in (("first", pa), ("second", pb)):
        if not np.all(np.isfinite(vec)) or vec.min() < -1e-12:
            raise ValueError(f"{name} distribution must be finite and non-negative")
        if abs(vec.sum() - 1.0) > _NORM_TOL:
            raise ValueError(
                f"{name} distribution must be normalized within {_NORM_TOL:g}, sums to {vec.sum()!r}"
            )
    return float(np.sum(np.sqrt(np.clip(pa, 0.0, None) * np.clip(pb, 0.0, None))))


def photocount_fidelity(measured, modeled) -> float:
    """Fidelity between a measured and a modeled click distribution."""
    return fidelity(measured, modeled)


def mean_photon_number(dist) -> float:
    """First moment of a photon-number distribution."""
    p = as_probs(dist)
    return float(np.arange(p.size) @ p)


def hbt_alpha(dist, eta: float) -> float:
    """Coincidence-to-accidental ratio of a balanced beam-splitter test.

    Splits the field 50:50 onto two click detectors of efficiency eta and
    returns P12 / (P1 * P2).  The value is 0 for a single photon, 1 for
    Poissonian light, and approaches 2 for thermal light as eta -> 0.

    Args:
        dist: photon-number distribution entering the splitter.
        eta: detector efficiency, in (0, 1].
    """
    p = as_probs(dist)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta!r}")
    if not np.all(np.isfinite(p)) or p.min() < -1e-12:
        raise ValueError("distribution must be finite and non-negative")
    if abs(p.sum() - 1.0) > _NORM_TOL:
        raise ValueError(
            f"distribution must be normalized within {_NORM_TOL:g}, sums to {p.sum()!r}"
        )
    m = np.arange(p.size)

    def click_deficit(x: float) -> np.ndarray:
        # (1 - x)^m - 1, kept accurate for small x where the direct power
        # would lose the tiny departure from 1 to rounding.
        if x >= 1.0:
            out = np.full(p.size, -1.0)
            out[0] = 0.0
            return out
        return np.expm1(m * math.log1p(-x))

    deficit_one = click_deficit(eta / 2.0)
    deficit_both = click_deficit(eta)
    p_single = -float(p @ deficit_one)
    if p_single <= 0.0:
        raise ValueError("distribution never produces a click; alpha is undefined")
    # Per-m coincidence probability 1 - 2(1-eta/2)^m + (1-eta)^m.  It is
    # identically zero for m <= 1 (fewer than two photons cannot split),
    # so those terms are dropped rather than evaluated: alpha of any
    # sub-two-photon state is exactly 0, free of cancellation noise.
    coincidence = deficit_both - 2.0 * deficit_one
    p_coincidence = float(p[2:] @ coincidence[2:]) if p.size > 2 else 0.0
    return p_coincidence / (p_single * p_single)


@dataclass(frozen=True)
class FidelityReport:
    """Reconstruction quality of one run.

    distribution_fidelity compares the reconstructed noise law against a
    reference law; setting_fidelities compare measured and reconstructed
    click distributions per setting; tau_error is reconstructed minus
    reference transmittance.
    """

    distribution_fidelity: float
    setting_fidelities: tuple[float, ...]
    tau_reconstructed: float
    tau_reference: float

    @property
    def tau_error(self) -> float:
        return self.tau_reconstructed - self.tau_reference

    @property
    def worst_setting_fidelity(self) -> float:
        return min(self.setting_fidelities)
