"""Command-line surface: subcommands, flags, exit codes, artifacts."""

import json
from types import SimpleNamespace

import pytest

from channelrecon import load_dataset, load_report, report_body_bytes
from channelrecon.cli import main

CONFIG = {
    "scenario": {"xi": 0.092, "tau_ch": 0.85},
    "noise": {"kind": "poisson", "mu": 0.84},
    "plan": {"eta_tot": 0.509},
    "shots_per_setting": 1500,
    "seed": 5,
    "reconstruction": {"tau_range": [0.82, 0.88]},
}


def write_config(directory, data=CONFIG, name="config.json"):
    path = directory / name
    path.write_text(json.dumps(data))
    return path


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = write_config(root)
    out = root / "run"
    code = main(["pipeline", "--config", str(config), "--out", str(out)])
    assert code == 0
    return SimpleNamespace(root=root, config=config, out=out)


def test_pipeline_writes_all_artifacts(workdir):
    names = {p.name for p in workdir.out.iterdir()}
    assert {
        "dataset.csv",
        "report.json",
        "noise_distribution.csv",
        "photocounts.csv",
        "setting_fidelities.csv",
        "noise_distribution.png",
        "photocounts.png",
        "setting_fidelities.png",
    } <= names


def test_simulate_then_reconstruct_matches_pipeline(workdir, tmp_path):
    dataset_path = tmp_path / "dataset.csv"
    assert main(["simulate", "--config", str(workdir.config), "--out", str(dataset_path)]) == 0
    assert load_dataset(dataset_path) == load_dataset(workdir.out / "dataset.csv")

    report_path = tmp_path / "report.json"
    code = main(
        [
            "reconstruct",
            "--config", str(workdir.config),
            "--dataset", str(dataset_path),
            "--out", str(report_path),
            "--no-figures",
        ]
    )
    assert code == 0
    staged = load_report(report_path)
    direct = load_report(workdir.out / "report.json")
    assert report_body_bytes(staged) == report_body_bytes(direct)
    assert not list(tmp_path.glob("*.png"))


def test_seed_override_changes_the_dataset(workdir, tmp_path):
    path = tmp_path / "reseeded.csv"
    code = main(
        ["simulate", "--config", str(workdir.config), "--seed", "9", "--out", str(path)]
    )
    assert code == 0
    reseeded = load_dataset(path)
    assert reseeded.seed == 9
    assert reseeded != load_dataset(workdir.out / "dataset.csv")


def test_evaluate_accepts_a_fresh_report(workdir, capsys):
    assert main(["evaluate", "--report", str(workdir.out / "report.json")]) == 0
    out = capsys.readouterr().out
    assert "report reproduces all derived quantities" in out
    assert "MISMATCH" not in out


def test_evaluate_flags_a_tampered_report(workdir, tmp_path, capsys):
    payload = json.loads((workdir.out / "report.json").read_text())
    payload["body"]["reconstruction"]["tau"] += 0.001
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(payload))
    assert main(["evaluate", "--report", str(tampered)]) == 1
    assert "MISMATCH" in capsys.readouterr().out


def test_sweep_lambda_keeps_requested_order(workdir, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(
        [
            "sweep-lambda",
            "--config", str(workdir.config),
            "--lambdas", "1e-2,1e-4",
            "--out", str(out),
        ]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "lambda,objective,data_residual,penalty,tau_rec,iterations,converged"
    assert [float(line.split(",")[0]) for line in lines[1:]] == [1e-2, 1e-4]


def test_validation_errors_exit_1(tmp_path, capsys):
    bad = json.loads(json.dumps(CONFIG))
    bad["scenario"]["xi"] = 1.2
    config = write_config(tmp_path, bad)
    assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "x.csv")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "xi" in err

    missing = tmp_path / "missing.json"
    assert main(["simulate", "--config", str(missing), "--out", str(tmp_path / "y.csv")]) == 1


def test_nonconvergence_exits_2_but_still_writes(tmp_path):
    impatient = json.loads(json.dumps(CONFIG))
    impatient["shots_per_setting"] = 300
    impatient["reconstruction"]["max_iterations"] = 2
    config = write_config(tmp_path, impatient)
    out = tmp_path / "run"
    code = main(["pipeline", "--config", str(config), "--out", str(out), "--no-figures"])
    assert code == 2
    report = load_report(out / "report.json")
    assert not report.converged


def test_unknown_command_is_a_usage_error():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
