"""Run configuration: strict JSON schema with explicit, recorded defaults.

Loading resolves every optional key, so the echo of a loaded config is
fully self-describing and loading its own serialization is the identity.
Unknown keys are rejected by name rather than ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .forward import (
    NOISE_KINDS,
    ChannelScenario,
    DetectionPlan,
    NoiseDistribution,
    poisson_noise,
    thermal_noise,
    truncation_bound,
)

DEFAULT_TAIL_EPSILON = 1e-8
DEFAULT_SMOOTHING = 1e-3
DEFAULT_SHOTS = 100_000
DEFAULT_SEED = 0
DEFAULT_TAU_RANGE = (0.0, 1.0)
DEFAULT_GRAD_TOL = 1e-9
DEFAULT_TAU_TOL = 1e-6
DEFAULT_MAX_ITERATIONS = 100_000
DEFAULT_SETTINGS = tuple(float(t) for t in np.linspace(0.1, 1.0, 10))


@dataclass(frozen=True)
class ReconstructionSettings:
    """Solver knobs used by the reconstruction stage.

    A cutoff of None means "match the simulated noise cutoff"; it is
    resolved when the settings are attached to a run configuration.
    """

    cutoff: int | None = None
    lam: float = DEFAULT_SMOOTHING
    tau_range: tuple[float, float] = DEFAULT_TAU_RANGE
    grad_tol: float = DEFAULT_GRAD_TOL
    tau_tol: float = DEFAULT_TAU_TOL
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 1:
            raise ValueError(f"reconstruction.cutoff must be at least 1, got {self.cutoff!r}")
        if self.lam < 0.0:
            raise ValueError(f"reconstruction.lambda must be non-negative, got {self.lam!r}")
        object.__setattr__(self, "tau_range", (float(self.tau_range[0]), float(self.tau_range[1])))
        lo, hi = self.tau_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError(
                f"reconstruction.tau_range must lie within [0, 1], got {self.tau_range!r}"
            )
        if self.grad_tol <= 0.0 or self.tau_tol <= 0.0:
            raise ValueError("reconstruction tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError(
                f"reconstruction.max_iterations must be at least 1, got {self.max_iterations!r}"
            )


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved description of one simulate-and-reconstruct run.

    A noise_cutoff of None resolves to the smallest support holding all
    but DEFAULT_TAIL_EPSILON of the noise law's mass.
    """

    scenario: ChannelScenario
    noise_kind: str
    mu: float
    plan: DetectionPlan
    noise_cutoff: int | None = None
    shots_per_setting: int = DEFAULT_SHOTS
    seed: int = DEFAULT_SEED
    recon: ReconstructionSettings = ReconstructionSettings()

    def __post_init__(self):
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise.kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}")
        if self.mu < 0.0:
            raise ValueError(f"noise.mu must be non-negative, got {self.mu!r}")
        if self.noise_cutoff is None:
            resolved = max(1, truncation_bound(self.noise_kind, self.mu, DEFAULT_TAIL_EPSILON))
            object.__setattr__(self, "noise_cutoff", resolved)
        if self.noise_cutoff < 1:
            raise ValueError(f"noise.cutoff must be at least 1, got {self.noise_cutoff!r}")
        if self.shots_per_setting < 1:
            raise ValueError(f"shots_per_setting must be at least 1, got {self.shots_per_setting!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.recon.cutoff is None:
            object.__setattr__(self, "recon", replace(self.recon, cutoff=self.noise_cutoff))

    def noise(self) -> NoiseDistribution:
        """The truncated noise law this config simulates."""
        if self.noise_kind == "poisson":
            return poisson_noise(self.mu, self.noise_cutoff)
        return thermal_noise(self.mu, self.noise_cutoff)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)


def _require_section(data: dict, name: str, allowed: tuple[str, ...]) -> dict:
    section = data.get(name)
    if section is None:
        raise ValueError(f"config is missing the {name!r} section")
    if not isinstance(section, dict):
        raise ValueError(f"config section {name!r} must be an object")
    for key in section:
        if key not in allowed:
            raise ValueError(f"unknown key {key!r} in section {name!r}")
    return section


def _number(section: dict, section_name: str, key: str, required: bool = True, default=None):
    if key not in section:
        if required:
            raise ValueError(f"config is missing {section_name}.{key}")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{section_name}.{key} must be a number, got {value!r}")
    return value


def _integer(section: dict, section_name: str, key: str, required: bool = True, default=None):
    if key not in section:
        if required:
            raise ValueError(f"config is missing {section_name}.{key}")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{section_name}.{key} must be an integer, got {value!r}")
    return value


_TOP_KEYS = ("scenario", "noise", "plan", "shots_per_setting", "seed", "reconstruction")
_SCENARIO_KEYS = ("xi", "tau_ch")
_NOISE_KEYS = ("kind", "mu", "cutoff")
_PLAN_KEYS = ("eta_tot", "settings", "eta_det", "gamma")
_RECON_KEYS = ("cutoff", "lambda", "tau_range", "grad_tol", "tau_tol", "max_iterations")


def config_from_dict(data: dict) -> RunConfig:
    """Validate a parsed config mapping and resolve all defaults."""
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    for key in data:
        if key not in _TOP_KEYS:
            raise ValueError(f"unknown config key {key!r}")

    scenario_raw = _require_section(data, "scenario", _SCENARIO_KEYS)
    scenario = ChannelScenario(
        xi=float(_number(scenario_raw, "scenario", "xi")),
        tau_ch=float(_number(scenario_raw, "scenario", "tau_ch")),
    )

    noise_raw = _require_section(data, "noise", _NOISE_KEYS)
    kind = noise_raw.get("kind")
    if kind not in NOISE_KINDS:
        raise ValueError(f"noise.kind must be one of {NOISE_KINDS}, got {kind!r}")
    mu = float(_number(noise_raw, "noise", "mu"))
    cutoff = _integer(noise_raw, "noise", "cutoff", required=False)
    if cutoff is None:
        cutoff = max(1, truncation_bound(kind, mu, DEFAULT_TAIL_EPSILON))

    plan_raw = _require_section(data, "plan", _PLAN_KEYS)
    eta_tot = float(_number(plan_raw, "plan", "eta_tot"))
    settings = plan_raw.get("settings", list(DEFAULT_SETTINGS))
    if not isinstance(settings, (list, tuple)) or not settings:
        raise ValueError("plan.settings must be a non-empty list of attenuations")
    for value in settings:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"plan.settings entries must be numbers, got {value!r}")
    eta_det = _number(plan_raw, "plan", "eta_det", required=False)
    gamma = _number(plan_raw, "plan", "gamma", required=False)
    plan = DetectionPlan(
        eta_tot=eta_tot,
        settings=tuple(float(t) for t in settings),
        eta_det=None if eta_det is None else float(eta_det),
        gamma=None if gamma is None else float(gamma),
    )

    shots = _integer(data, "config", "shots_per_setting", required=False, default=DEFAULT_SHOTS)
    seed = _integer(data, "config", "seed", required=False, default=DEFAULT_SEED)

    recon_raw = data.get("reconstruction", {})
    if not isinstance(recon_raw, dict):
        raise ValueError("config section 'reconstruction' must be an object")
    for key in recon_raw:
        if key not in _RECON_KEYS:
            raise ValueError(f"unknown key {key!r} in section 'reconstruction'")
    recon_cutoff = _integer(recon_raw, "reconstruction", "cutoff", required=False, default=cutoff)
    lam = float(
        _number(recon_raw, "reconstruction", "lambda", required=False, default=DEFAULT_SMOOTHING)
    )
    tau_range_raw = recon_raw.get("tau_range", list(DEFAULT_TAU_RANGE))
    if (
        not isinstance(tau_range_raw, (list, tuple))
        or len(tau_range_raw) != 2
        or any(isinstance(t, bool) or not isinstance(t, (int, float)) for t in tau_range_raw)
    ):
        raise ValueError("reconstruction.tau_range must be a [low, high] pair of numbers")
    recon = ReconstructionSettings(
        cutoff=recon_cutoff,
        lam=lam,
        tau_range=(float(tau_range_raw[0]), float(tau_range_raw[1])),
        grad_tol=float(
            _number(recon_raw, "reconstruction", "grad_tol", required=False, default=DEFAULT_GRAD_TOL)
        ),
        tau_tol=float(
            _number(recon_raw, "reconstruction", "tau_tol", required=False, default=DEFAULT_TAU_TOL)
        ),
        max_iterations=_integer(
            recon_raw, "reconstruction", "max_iterations", required=False, default=DEFAULT_MAX_ITERATIONS
        ),
    )

    return RunConfig(
        scenario=scenario,
        noise_kind=kind,
        mu=mu,
        noise_cutoff=cutoff,
        plan=plan,
        shots_per_setting=shots,
        seed=seed,
        recon=recon,
    )


def config_to_dict(config: RunConfig) -> dict:
    """Serialize a config with every resolved value explicit."""
    plan: dict = {"eta_tot": config.plan.eta_tot, "settings": list(config.plan.settings)}
    if config.plan.eta_det is not None:
        plan["eta_det"] = config.plan.eta_det
    if config.plan.gamma is not None:
        plan["gamma"] = config.plan.gamma
    return {
        "scenario": {"xi": config.scenario.xi, "tau_ch": config.scenario.tau_ch},
        "noise": {"kind": config.noise_kind, "mu": config.mu, "cutoff": config.noise_cutoff},
        "plan": plan,
        "shots_per_setting": config.shots_per_setting,
        "seed": config.seed,
        "reconstruction": {
            "cutoff": config.recon.cutoff,
            "lambda": config.recon.lam,
            "tau_range": list(config.recon.tau_range),
            "grad_tol": config.recon.grad_tol,
            "tau_tol": config.recon.tau_tol,
            "max_iterations": config.recon.max_iterations,
        },
    }


def load_config(path) -> RunConfig:
    """Load and validate a JSON run configuration."""
    path = Path(path)
    with path.open() as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data)


def save_config(config: RunConfig, path) -> Path:
    """Write a fully-resolved config as JSON."""
    path = Path(path)
    with path.open("w") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
