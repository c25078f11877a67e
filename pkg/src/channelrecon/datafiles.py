"""On-disk formats: dataset CSV and run-report JSON.

Both formats carry a version stamp.  Loaders refuse files whose major
version they do not understand; minor bumps stay readable.  Floats are
written with repr, so a load/save cycle is lossless.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .config import RunConfig, config_from_dict, config_to_dict
from .simulate import EmpiricalDataset, SettingRecord

DATASET_FORMAT = "channelrecon-dataset"
DATASET_MAJOR = 1
DATASET_MINOR = 0
DATASET_HEADER = ("setting_index", "eta", "k", "counts", "shots")

REPORT_FORMAT = "channelrecon-report"
REPORT_MAJOR = 1
REPORT_MINOR = 0

_DATASET_STAMP = re.compile(
    r"#\s*" + DATASET_FORMAT + r"\s+v(\d+)\.(\d+)\s+rng=(\S+)\s+seed=(\S+)\s*$"
)


def save_dataset(dataset: EmpiricalDataset, path) -> Path:
    """Write a dataset as one CSV row per (setting, click number)."""
    path = Path(path)
    seed = "none" if dataset.seed is None else str(dataset.seed)
    with path.open("w", newline="") as fh:
        fh.write(f"# {DATASET_FORMAT} v{DATASET_MAJOR}.{DATASET_MINOR} rng={dataset.rng} seed={seed}\n")
        writer = csv.writer(fh)
        writer.writerow(DATASET_HEADER)
        for i, record in enumerate(dataset.records):
            for k, count in enumerate(record.counts):
                writer.writerow([i, repr(record.eta), k, count, record.shots])
    return path


def _parse_int(text: str, row: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"data row {row}: column {column!r} must be an integer, got {text!r}") from None


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"data row {row}: column {column!r} must be a number, got {text!r}") from None


def load_dataset(path) -> EmpiricalDataset:
    """Read a dataset CSV written by :func:`save_dataset`.

    Rows must be grouped by setting, with click numbers contiguous from
    zero inside each group.  Validation errors name the offending row.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline()
        rng = "unknown"
        seed: int | None = None
        if first.startswith("#"):
            match = _DATASET_STAMP.match(first.strip())
            if match is None:
                raise ValueError(f"{path}: unrecognized dataset stamp line {first.strip()!r}")
            major = int(match.group(1))
            if major != DATASET_MAJOR:
                raise ValueError(
                    f"{path}: unsupported dataset format major version {major} "
                    f"(this reader handles {DATASET_MAJOR})"
                )
            rng = match.group(3)
            seed = None if match.group(4) == "none" else int(match.group(4))
            header_line = fh.readline()
        else:
            header_line = first
        header = tuple(h.strip() for h in header_line.strip().split(","))
        if header != DATASET_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(DATASET_HEADER)!r}, got {header_line.strip()!r}"
            )
        rows = []
        for lineno, parts in enumerate(csv.reader(fh), start=1):
            if not parts:
                continue
            if len(parts) != 5:
                raise ValueError(f"data row {lineno}: expected 5 columns, got {len(parts)}")
            rows.append(
                (
                    _parse_int(parts[0], lineno, "setting_index"),
                    _parse_float(parts[1], lineno, "eta"),
                    _parse_int(parts[2], lineno, "k"),
                    _parse_int(parts[3], lineno, "counts"),
                    _parse_int(parts[4], lineno, "shots"),
                    lineno,
                )
            )
    if not rows:
        raise ValueError(f"{path}: dataset contains no data rows")

    records = []
    pos = 0
    expected_setting = 0
    while pos < len(rows):
        setting, eta, _, _, shots, first_line = rows[pos]
        if setting != expected_setting:
            raise ValueError(
                f"data row {first_line}: expected setting_index {expected_setting}, got {setting}"
            )
        counts = []
        while pos < len(rows) and rows[pos][0] == setting:
            _, row_eta, k, count, row_shots, lineno = rows[pos]
            if row_eta != eta:
                raise ValueError(f"data row {lineno}: eta changed within setting {setting}")
            if row_shots != shots:
                raise ValueError(f"data row {lineno}: shots changed within setting {setting}")
            if k != len(counts):
                raise ValueError(
                    f"data row {lineno}: expected k = {len(counts)} in setting {setting}, got {k}"
                )
            if count < 0:
                raise ValueError(f"data row {lineno}: counts must be non-negative, got {count}")
            counts.append(count)
            pos += 1
        try:
            records.append(SettingRecord(eta=eta, counts=tuple(counts), shots=shots))
        except ValueError as exc:
            raise ValueError(f"setting {setting}: {exc}") from None
        expected_setting += 1
    return EmpiricalDataset(records=tuple(records), seed=seed, rng=rng, source=str(path))


@dataclass(frozen=True)
class SettingTable:
    """Comparable click distributions of one setting, padded to one length."""

    setting_index: int
    eta: float
    p_empirical: tuple[float, ...]
    p_reconstructed: tuple[float, ...]
    p_expected: tuple[float, ...]


@dataclass(frozen=True)
class RunReport:
    """Self-contained record of one reconstruction run.

    Everything except the ``created_utc`` / ``wall_clock_seconds`` stamps
    takes part in equality and in the comparable body, so two runs of the
    same configuration and seed produce byte-identical bodies.
    """

    config: RunConfig
    dataset: EmpiricalDataset
    b_reconstructed: tuple[float, ...]
    tau_reconstructed: float
    objective_value: float
    iterations: int
    converged: bool
    grad_norm: float
    residuals: tuple[tuple[float, ...], ...]
    b_expected: tuple[float, ...]
    expected_tail_mass: float
    tau_reference: float
    distribution_fidelity: float
    setting_fidelities: tuple[float, ...]
    mean_photon_reconstructed: float
    mean_photon_expected: float
    photocounts: tuple[SettingTable, ...]
    created_utc: str = field(default="", compare=False)
    wall_clock_seconds: float = field(default=0.0, compare=False)


def _dataset_to_dict(dataset: EmpiricalDataset) -> dict:
    return {
        "rng": dataset.rng,
        "seed": dataset.seed,
        "settings": [
            {"eta": r.eta, "counts": list(r.counts), "shots": r.shots} for r in dataset.records
        ],
    }


def _dataset_from_dict(data: dict) -> EmpiricalDataset:
    records = tuple(
        SettingRecord(eta=s["eta"], counts=tuple(s["counts"]), shots=s["shots"])
        for s in data["settings"]
    )
    return EmpiricalDataset(records=records, seed=data["seed"], rng=data["rng"])


def report_body(report: RunReport) -> dict:
    """The comparable body: every deterministic field, no timestamps."""
    return {
        "config": config_to_dict(report.config),
        "dataset": _dataset_to_dict(report.dataset),
        "reconstruction": {
            "b": list(report.b_reconstructed),
            "tau": report.tau_reconstructed,
            "objective_value": report.objective_value,
            "iterations": report.iterations,
            "converged": report.converged,
            "grad_norm": report.grad_norm,
            "residuals": [list(row) for row in report.residuals],
        },
        "expected": {
            "b": list(report.b_expected),
            "tail_mass": report.expected_tail_mass,
            "tau": report.tau_reference,
        },
        "metrics": {
            "distribution_fidelity": report.distribution_fidelity,
            "setting_fidelities": list(report.setting_fidelities),
            "mean_photon_reconstructed": report.mean_photon_reconstructed,
            "mean_photon_expected": report.mean_photon_expected,
        },
        "photocounts": [
            {
                "setting_index": t.setting_index,
                "eta": t.eta,
                "p_empirical": list(t.p_empirical),
                "p_reconstructed": list(t.p_reconstructed),
                "p_expected": list(t.p_expected),
            }
            for t in report.photocounts
        ],
    }


def report_body_bytes(report: RunReport) -> bytes:
    """Canonical encoding of the comparable body, for byte-level comparison."""
    return json.dumps(report_body(report), sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def save_report(report: RunReport, path, artifacts: list[str] | None = None) -> Path:
    """Write a report as JSON; ``artifacts`` lists files emitted alongside."""
    path = Path(path)
    payload = {
        "format": {"name": REPORT_FORMAT, "major": REPORT_MAJOR, "minor": REPORT_MINOR},
        "body": report_body(report),
        "meta": {
            "created_utc": report.created_utc,
            "wall_clock_seconds": report.wall_clock_seconds,
            "artifacts": list(artifacts or []),
        },
    }
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def load_report(path) -> RunReport:
    """Read a report JSON written by :func:`save_report`."""
    path = Path(path)
    with path.open() as fh:
        payload = json.load(fh)
    for key in ("format", "body", "meta"):
        if key not in payload:
            raise ValueError(f"{path}: report is missing the {key!r} section")
    fmt = payload["format"]
    if fmt.get("name") != REPORT_FORMAT:
        raise ValueError(f"{path}: not a {REPORT_FORMAT} file (format name {fmt.get('name')!r})")
    if fmt.get("major") != REPORT_MAJOR:
        raise ValueError(
            f"{path}: unsupported report format major version {fmt.get('major')!r} "
            f"(this reader handles {REPORT_MAJOR})"
        )
    body = payload["body"]
    meta = payload["meta"]
    recon = body["reconstruction"]
    expected = body["expected"]
    metrics = body["metrics"]
    tables = tuple(
        SettingTable(
            setting_index=t["setting_index"],
            eta=t["eta"],
            p_empirical=tuple(t["p_empirical"]),
            p_reconstructed=tuple(t["p_reconstructed"]),
            p_expected=tuple(t["p_expected"]),
        )
        for t in body["photocounts"]
    )
    return RunReport(
        config=config_from_dict(body["config"]),
        dataset=_dataset_from_dict(body["dataset"]),
        b_reconstructed=tuple(recon["b"]),
        tau_reconstructed=recon["tau"],
        objective_value=recon["objective_value"],
        iterations=recon["iterations"],
        converged=recon["converged"],
        grad_norm=recon["grad_norm"],
        residuals=tuple(tuple(row) for row in recon["residuals"]),
        b_expected=tuple(expected["b"]),
        expected_tail_mass=expected["tail_mass"],
        tau_reference=expected["tau"],
        distribution_fidelity=metrics["distribution_fidelity"],
        setting_fidelities=tuple(metrics["setting_fidelities"]),
        mean_photon_reconstructed=metrics["mean_photon_reconstructed"],
        mean_photon_expected=metrics["mean_photon_expected"],
        photocounts=tables,
        created_utc=meta.get("created_utc", ""),
        wall_clock_seconds=meta.get("wall_clock_seconds", 0.0),
    )
