"""Command-line entry points.

Exit codes: 0 on success, 1 on validation or I/O errors, 2 when a
reconstruction ran but did not converge (outputs are still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .datafiles import load_dataset, load_report, save_dataset, save_report
from .pipeline import (
    build_problem,
    emit_plot_data,
    evaluate_report,
    reconstruct_dataset,
    run_pipeline,
)
from .plotting import render_figures
from .reconstruct import sweep_lambda
from .simulate import SimulationConfig, simulate_run

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NO_CONVERGENCE = 2

_DEFAULT_LAMBDAS = "1e-5,1e-4,1e-3,1e-2"


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _simulated_dataset(config: RunConfig):
    sim = SimulationConfig(
        scenario=config.scenario,
        noise=config.noise(),
        plan=config.plan,
        shots_per_setting=config.shots_per_setting,
        seed=config.seed,
    )
    return simulate_run(sim)


def _print_summary(report) -> None:
    print(f"tau reconstructed: {report.tau_reconstructed:.6f} (reference {report.tau_reference:.6f})")
    print(f"distribution fidelity: {report.distribution_fidelity:.6f}")
    print(f"worst setting fidelity: {min(report.setting_fidelities):.6f}")
    print(f"iterations: {report.iterations}, converged: {report.converged}")


def _emit_outputs(report, outdir: Path, figures: bool) -> list[str]:
    paths = [str(p) for p in emit_plot_data(report, outdir)]
    if figures:
        paths.extend(str(p) for p in render_figures(report, outdir))
    return paths


def cmd_simulate(args) -> int:
    config = _load_run_config(args)
    dataset = _simulated_dataset(config)
    path = save_dataset(dataset, args.out)
    print(f"wrote {len(dataset)} settings x {config.shots_per_setting} shots to {path}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    config = _load_run_config(args)
    dataset = load_dataset(args.dataset)
    report = reconstruct_dataset(config, dataset)
    out = Path(args.out)
    artifacts = _emit_outputs(report, out.parent if out.parent != Path("") else Path("."), not args.no_figures)
    save_report(report, out, artifacts=artifacts)
    print(f"wrote report to {out}")
    _print_summary(report)
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_pipeline(args) -> int:
    config = _load_run_config(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report = run_pipeline(config)
    save_dataset(report.dataset, outdir / "dataset.csv")
    artifacts = _emit_outputs(report, outdir, not args.no_figures)
    save_report(report, outdir / "report.json", artifacts=artifacts)
    print(f"wrote dataset, report and plot data to {outdir}")
    _print_summary(report)
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_evaluate(args) -> int:
    report = load_report(args.report)
    checks = evaluate_report(report)
    ok = True
    for name, matches in checks:
        print(f"{name}: {'ok' if matches else 'MISMATCH'}")
        ok = ok and matches
    if not ok:
        print("report is not self-consistent", file=sys.stderr)
        return EXIT_VALIDATION
    print("report reproduces all derived quantities")
    return EXIT_OK


def cmd_sweep_lambda(args) -> int:
    config = _load_run_config(args)
    lambdas = [float(part) for part in args.lambdas.split(",") if part.strip()]
    if not lambdas:
        raise ValueError("--lambdas must name at least one value")
    dataset = _simulated_dataset(config)
    points = sweep_lambda(build_problem(config, dataset), lambdas)
    out = Path(args.out)
    with out.open("w") as fh:
        fh.write("lambda,objective,data_residual,penalty,tau_rec,iterations,converged\n")
        for p in points:
            fh.write(
                f"{p.lam!r},{p.objective_value!r},{p.data_residual!r},"
                f"{p.penalty!r},{p.tau_rec!r},{p.iterations},{p.converged}\n"
            )
    print(f"wrote {len(points)} sweep points to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channelrecon",
        description="Simulate and jointly reconstruct noise statistics and transmittance "
        "of a lossy optical channel from multi-efficiency photocounting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON run configuration")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    add_common(p)
    p.add_argument("--out", default="dataset.csv", help="dataset CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="fit a dataset and write a report")
    add_common(p)
    p.add_argument("--dataset", required=True, help="dataset CSV to fit")
    p.add_argument("--out", default="report.json", help="report JSON path")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("pipeline", help="simulate, reconstruct and score in one go")
    add_common(p)
    p.add_argument("--out", default="runout", help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("evaluate", help="re-derive a report's numbers and verify them")
    p.add_argument("--report", required=True, help="report JSON to check")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-lambda", help="trace the L-curve over smoothing weights")
    add_common(p)
    p.add_argument("--lambdas", default=_DEFAULT_LAMBDAS, help="comma-separated weights")
    p.add_argument("--out", default="lambda_sweep.csv", help="sweep CSV path")
    p.set_defaults(func=cmd_sweep_lambda)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
