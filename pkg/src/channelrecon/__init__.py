"""Joint reconstruction of channel noise statistics and transmittance.

Set CHANNELRECON_SINGLE_THREAD=1 before Python starts (or before the
first numpy import) to pin the numerical backends to one thread.
"""

import os

if os.environ.get("CHANNELRECON_SINGLE_THREAD"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, "1")
    del _var

from .config import (
    ReconstructionSettings,
    RunConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from .datafiles import (
    RunReport,
    SettingTable,
    load_dataset,
    load_report,
    report_body,
    report_body_bytes,
    save_dataset,
    save_report,
)
from .forward import (
    ChannelScenario,
    DetectionPlan,
    MixedDistribution,
    NoiseDistribution,
    PhotocountDistribution,
    binomial_thinning,
    forward_photocounts,
    mix_source_noise,
    mixing_matrix,
    poisson_noise,
    thermal_noise,
    thinning_matrix,
    truncation_bound,
)
from .metrics import (
    FidelityReport,
    fidelity,
    hbt_alpha,
    mean_photon_number,
    photocount_fidelity,
)
from .pipeline import (
    build_problem,
    derive_quantities,
    emit_plot_data,
    evaluate_report,
    reconstruct_dataset,
    run_pipeline,
)
from .reconstruct import (
    LambdaSweepPoint,
    ReconstructionProblem,
    ReconstructionResult,
    evaluate_solution,
    gradient_b,
    golden_section,
    objective,
    project_simplex,
    smoothness_penalty,
    solve,
    sweep_lambda,
)
from .simulate import (
    EmpiricalDataset,
    SettingRecord,
    SimulationConfig,
    empirical_probabilities,
    sample_photocounts,
    setting_stream,
    simulate_run,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelScenario",
    "DetectionPlan",
    "EmpiricalDataset",
    "FidelityReport",
    "LambdaSweepPoint",
    "MixedDistribution",
    "NoiseDistribution",
    "PhotocountDistribution",
    "ReconstructionProblem",
    "ReconstructionResult",
    "ReconstructionSettings",
    "RunConfig",
    "RunReport",
    "SettingRecord",
    "SettingTable",
    "SimulationConfig",
    "binomial_thinning",
    "build_problem",
    "config_from_dict",
    "config_to_dict",
    "derive_quantities",
    "emit_plot_data",
    "empirical_probabilities",
    "evaluate_report",
    "evaluate_solution",
    "fidelity",
    "forward_photocounts",
    "gradient_b",
    "golden_section",
    "hbt_alpha",
    "load_config",
    "load_dataset",
    "load_report",
    "mean_photon_number",
    "mix_source_noise",
    "mixing_matrix",
    "objective",
    "photocount_fidelity",
    "poisson_noise",
    "project_simplex",
    "reconstruct_dataset",
    "report_body",
    "report_body_bytes",
    "run_pipeline",
    "sample_photocounts",
    "save_config",
    "save_dataset",
    "save_report",
    "setting_stream",
    "simulate_run",
    "smoothness_penalty",
    "solve",
    "sweep_lambda",
    "thermal_noise",
    "thinning_matrix",
    "truncation_bound",
]
