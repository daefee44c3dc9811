"""Command line behaviour: pipelines, exit codes, validate suites."""

from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from mbivs.cli import EXIT_IO, EXIT_OK, EXIT_VALIDATION, main
from mbivs.simdata import ScenarioSpec

TOY = ScenarioSpec("toy", 40, 6, 2, (1.0,), ((0, 1),), n_test=10)


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(TOY.to_json())
    return str(path)


def _simulate(out, spec_file, seed=0):
    return main(["simulate", "--spec-file", spec_file, "--seed", str(seed), "--out", str(out)])


def test_simulate_is_deterministic(tmp_path, spec_file):
    assert _simulate(tmp_path / "a", spec_file) == EXIT_OK
    assert _simulate(tmp_path / "b", spec_file) == EXIT_OK
    assert _simulate(tmp_path / "c", spec_file, seed=1) == EXIT_OK
    a = (tmp_path / "a" / "x.csv").read_bytes()
    assert a == (tmp_path / "b" / "x.csv").read_bytes()
    assert a != (tmp_path / "c" / "x.csv").read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["params"]["seed"] == 0


def test_simulate_fit_infer_pipeline(tmp_path, spec_file, capsys):
    data = tmp_path / "data"
    chains = tmp_path / "chains"
    report = tmp_path / "report"
    assert _simulate(data, spec_file) == EXIT_OK
    assert main([
        "fit", "--data", str(data), "--out", str(chains),
        "--iterations", "60", "--burn-in", "20", "--chains", "2", "--seed", "3",
    ]) == EXIT_OK
    assert (chains / "chain_00" / "incl.csv").exists()
    assert (chains / "chain_01" / "meta.json").exists()
    assert main([
        "infer", "--samples", str(chains), "--out", str(report),
        "--data", str(data), "--permutations", "100", "--seed", "3",
    ]) == EXIT_OK
    out = capsys.readouterr().out
    assert "80 pooled draws" in out
    rep = json.loads((report / "report.json").read_text())
    assert rep["n_draws"] == 80
    assert (report / "pip_table.csv").exists()
    assert (report / "subsets.csv").exists()
    # a single chain directory works as --samples too
    report2 = tmp_path / "report2"
    assert main([
        "infer", "--samples", str(chains / "chain_00"), "--out", str(report2),
        "--permutations", "100",
    ]) == EXIT_OK
    assert json.loads((report2 / "report.json").read_text())["n_draws"] == 40


def test_fit_with_annotations_flag(tmp_path, spec_file):
    data = tmp_path / "data"
    assert _simulate(data, spec_file) == EXIT_OK
    ann = tmp_path / "ann.csv"
    ann.write_text("annotation\n" + "\n".join("101010") + "\n")
    out = tmp_path / "chains"
    assert main([
        "fit", "--data", str(data), "--out", str(out),
        "--iterations", "40", "--burn-in", "10", "--annotations", str(ann),
    ]) == EXIT_OK
    meta = json.loads((out / "chain_00" / "meta.json").read_text())
    assert meta["annotation"] is True
    assert (out / "chain_00" / "annotation_coef.csv").exists()


def test_bench_writes_tables(tmp_path, spec_file, capsys):
    out = tmp_path / "bench"
    assert main([
        "bench", "--spec-file", spec_file, "--replicates", "2",
        "--iterations", "40", "--burn-in", "10", "--permutations", "100",
        "--threads", "1", "--out", str(out),
    ]) == EXIT_OK
    lines = (out / "replicates.csv").read_text().splitlines()
    assert len(lines) == 3  # header + one row per replicate
    assert lines[0].startswith("replicate,")
    assert (out / "summary.csv").exists()
    assert "entry-level headline" in capsys.readouterr().out


def test_bad_dataset_exits_validation(tmp_path, spec_file, capsys):
    data = tmp_path / "data"
    assert _simulate(data, spec_file) == EXIT_OK
    (data / "groups.csv").write_text("group\n0\n0\n0\n1\n1\n1\n")  # 0-based: invalid
    code = main(["fit", "--data", str(data), "--out", str(tmp_path / "o"),
                 "--iterations", "20", "--burn-in", "5"])
    assert code == EXIT_VALIDATION
    assert "mbivs:" in capsys.readouterr().err


def test_missing_dataset_exits_io(tmp_path, capsys):
    code = main(["fit", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
    assert code == EXIT_IO
    assert "mbivs:" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path, spec_file):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--scenario", "I", "--spec-file", spec_file, "--out", "x"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["validate", "--suite", "bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_threads_env_fallback(tmp_path, spec_file, monkeypatch):
    monkeypatch.setenv("MBIVS_THREADS", "not-a-number")
    code = main(["bench", "--spec-file", spec_file, "--replicates", "1",
                 "--iterations", "20", "--burn-in", "5", "--permutations", "100",
                 "--out", str(tmp_path / "b")])
    assert code == EXIT_VALIDATION
    monkeypatch.setenv("MBIVS_THREADS", "2")
    code = main(["bench", "--spec-file", spec_file, "--replicates", "2",
                 "--iterations", "20", "--burn-in", "5", "--permutations", "100",
                 "--out", str(tmp_path / "b2")])
    assert code == EXIT_OK


def test_validate_oracle_suite(capsys):
    assert main(["validate", "--suite", "oracle"]) == EXIT_OK
    assert "suite oracle: PASS" in capsys.readouterr().out


def test_validate_distributions_suite(capsys):
    assert main(["validate", "--suite", "distributions"]) == EXIT_OK
    assert "suite distributions: PASS" in capsys.readouterr().out


def test_validate_geweke_suite_short(capsys):
    assert main(["validate", "--suite", "geweke", "--draws", "8000"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "suite geweke: PASS" in out
    assert "max |z|" in out


def test_console_script_installed():
    exe = shutil.which("mbivs")
    assert exe is not None
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("mbivs ")
