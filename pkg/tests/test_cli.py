import json

import numpy as np
import pytest

from core.constants import EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ABORT, EXIT_OK
from core.trace_io import read_trace, write_trace
from main import build_parser, main

from .conftest import example_path, make_trace


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture(scope="module")
def sphere_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sphere")
    assert main(["run", "--config", example_path("sphere_height.cfg"), "--out", str(out)]) == EXIT_OK
    return out


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--config", "x.cfg", "--seed", "1", "--seeds", "1..3"])


def test_sphere_run_meets_bound(sphere_run):
    trace = read_trace(sphere_run / "trace_seed0.csv")
    assert trace.iterations == 10_000
    assert trace.gap[-1] <= 4.9348e-4
    summary = json.loads((sphere_run / "summary.json").read_text(encoding="utf-8"))
    assert summary["method"] == "rgd"
    assert summary["bound_reports"]["trace"]["satisfied"]
    assert summary["runs"][0]["csv_file"] == "trace_seed0.csv"


def test_check_bound_command(sphere_run, capsys):
    path = sphere_run / "trace_seed0.csv"
    code, report = run_cli(capsys, "check-bound", path, "--p", "1", "--C", "4.934802200544679", "--anchor", "20")
    assert code == EXIT_OK
    assert report["satisfied"] and report["anchor_k"] == 20


def test_check_bound_violation_exit_code(tmp_path, capsys):
    k = np.arange(0, 1001)
    e = np.concatenate([[1.0], 1.0 / np.sqrt(k[1:])])
    path = write_trace(make_trace(k, e), tmp_path / "slow.csv")
    code, report = run_cli(capsys, "check-bound", path, "--p", "1", "--C", "1")
    assert code == EXIT_CHECK_FAILED
    assert report["worst_k"] == 1000


def test_reruns_are_byte_identical(sphere_run, tmp_path):
    again = tmp_path / "again"
    assert main(["run", "--config", example_path("sphere_height.cfg"), "--out", str(again)]) == EXIT_OK
    assert (again / "trace_seed0.csv").read_bytes() == (sphere_run / "trace_seed0.csv").read_bytes()


def test_rerun_from_summary(sphere_run, tmp_path):
    out = tmp_path / "from_summary"
    assert main(["run", "--config", str(sphere_run / "summary.json"), "--out", str(out)]) == EXIT_OK
    assert (out / "trace_seed0.csv").read_bytes() == (sphere_run / "trace_seed0.csv").read_bytes()


def test_sgd_listing(tmp_path, capsys):
    code, summary = run_cli(capsys, "run", "--config", example_path("sgd_listing.cfg"), "--out", tmp_path, "--with-x")
    assert code == EXIT_OK
    assert summary["runs"][0]["iterations"] == 8
    trace = read_trace(tmp_path / "trace_seed0.csv")
    assert trace.f_value[1] == 0.125
    assert trace.xi[1, 0] == 0.5
    header = (tmp_path / "trace_seed0.csv").read_text(encoding="utf-8").split("\n")[0]
    assert header.endswith(",xi_0")


def test_variants_write_separate_files(tmp_path, capsys):
    code, summary = run_cli(capsys, "run", "--config", example_path("quadratic_momentum.cfg"), "--out", tmp_path)
    assert code == EXIT_OK
    assert [r["variant"] for r in summary["runs"]] == ["adaptive", "normal"]
    reports = summary["schedule_reports"]
    assert reports["normal"]["alpha_to_zero"] is False
    assert reports["adaptive"]["alpha_to_zero"] is None
    assert reports["adaptive"]["beta_to_zero"] is None
    adaptive = read_trace(tmp_path / "adaptive_seed0.csv")
    assert adaptive.dist_to_opt[-1] <= 1e-6
    assert (tmp_path / "normal_seed0.csv").is_file()


def test_multi_seed_run_writes_mean(tmp_path, capsys):
    code, summary = run_cli(
        capsys, "run", "--config", example_path("sgd_montecarlo.cfg"), "--out", tmp_path,
        "--seeds", "1..20", "--override", "run.max_iters=300",
    )
    assert code == EXIT_OK
    assert summary["seeds"] == list(range(1, 21))
    assert len(summary["runs"]) == 20
    assert (tmp_path / "trace_seed20.csv").is_file()
    mean = read_trace(tmp_path / "trace_mean.csv")
    assert mean.iterations == 300
    assert "trace" in summary["rate_fits"]
    assert "trace" in summary["bound_reports"]


def test_single_seed_flag(tmp_path, capsys):
    code, summary = run_cli(
        capsys, "run", "--config", example_path("sgd_montecarlo.cfg"), "--out", tmp_path,
        "--seed", "42", "--override", "run.max_iters=50",
    )
    assert code == EXIT_OK
    assert summary["seeds"] == [42]
    assert (tmp_path / "trace_seed42.csv").is_file()


@pytest.mark.parametrize("override", [
    "schedule.alpha=powerlaw c=1 gamma=1.2",
    "run.speed=3",
    "run.max_iters=many",
])
def test_config_errors_exit_2(tmp_path, override):
    argv = ["run", "--config", example_path("sgd_listing.cfg"), "--out", str(tmp_path), "--override", override]
    assert main(argv) == EXIT_CONFIG_ERROR


def test_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR


def test_numerical_abort_exit_3(tmp_path):
    argv = ["run", "--config", example_path("quadratic_momentum.cfg"), "--out", str(tmp_path),
            "--override", "schedule.alpha=fixed 1e200", "--override", "schedule.beta=zero"]
    assert main(argv) == EXIT_NUMERICAL_ABORT
    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert summary["runs"][0]["aborted_at"] == 1
    assert summary["notes"]


def test_fit_command(tmp_path, capsys):
    k = np.arange(0, 1001)
    e = np.concatenate([[5.0], 5.0 / k[1:].astype(float) ** 2])
    path = write_trace(make_trace(k, e), tmp_path / "synthetic.csv")
    code, fit = run_cli(capsys, "fit", path, "--window", "10:1000")
    assert code == EXIT_OK
    assert fit["exponent"] == pytest.approx(2.0, abs=1e-9)
    assert fit["constant"] == pytest.approx(5.0, rel=1e-9)


@pytest.mark.parametrize("window", ["2000:3000", "10-100", "0:100"])
def test_fit_bad_window(tmp_path, window):
    k = np.arange(0, 101)
    path = write_trace(make_trace(k, 1.0 / (k + 1.0)), tmp_path / "t.csv")
    assert main(["fit", str(path), "--window", window]) == EXIT_CONFIG_ERROR


def test_fit_unknown_column(tmp_path):
    k = np.arange(0, 101)
    path = write_trace(make_trace(k, 1.0 / (k + 1.0)), tmp_path / "t.csv")
    assert main(["fit", str(path), "--window", "10:100", "--column", "energy"]) == EXIT_CONFIG_ERROR


def test_gradcheck(capsys):
    code, report = run_cli(capsys, "gradcheck", "--objective", "quadratic", "--A", "4 1; 1 3", "--b", "1 2")
    assert code == EXIT_OK
    assert report["passed"] and report["samples"] == 100
    code, report = run_cli(capsys, "gradcheck", "--objective", "quadratic", "--A", "4 1; 1 3", "--b", "1 2",
                           "--perturb", "1e-3")
    assert code == EXIT_CHECK_FAILED
    assert not report["passed"]


def test_gradcheck_plugin_and_config(capsys):
    code, report = run_cli(capsys, "gradcheck", "--objective", "rayleigh_quotient", "--A", "2 1 0; 1 3 1; 0 1 4")
    assert code == EXIT_OK
    assert report["objective"] == "rayleigh_quotient"
    code, report = run_cli(capsys, "gradcheck", "--config", example_path("sphere_height.cfg"), "--samples", "10")
    assert code == EXIT_OK
    assert report["objective"] == "sphere_height"


def test_gradcheck_unknown_objective():
    assert main(["gradcheck", "--objective", "rosenbrock"]) == EXIT_CONFIG_ERROR


@pytest.mark.parametrize("samples", ["0", "-3"])
def test_gradcheck_needs_samples(samples):
    assert main(["gradcheck", "--objective", "half_square", "--samples", samples]) == EXIT_CONFIG_ERROR
