import numpy as np
import pytest

from core.errors import ConfigError
from core.noise import NoiseSpec
from core.optimize import run_rgd, run_sgd
from core.trace_io import BASE_COLUMNS, format_trace, read_trace, write_trace

from .conftest import half_square_sgd_config, make_trace, sphere_config


def test_header_and_layout():
    text = format_trace(make_trace([0, 1], [0.5, 0.25]))
    lines = text.split("\n")
    assert lines[0] == ",".join(BASE_COLUMNS)
    assert lines[1] == "0,0.5,0.5,0,0,0,"
    assert text.endswith("\n") and "\r" not in text


def test_optional_columns():
    trace = run_sgd(half_square_sgd_config(max_iters=3, noise=NoiseSpec(family="uniform"), record_x=True))
    text = format_trace(trace, with_x=True, with_xi=True)
    header, first = text.split("\n")[:2]
    assert header.endswith(",x_0,xi_0")
    # 第 0 行没有噪声
    assert first.endswith(",10,")
    with pytest.raises(ValueError):
        format_trace(run_rgd(sphere_config(max_iters=2)), with_x=True)


def test_formatting_is_deterministic():
    cfg = sphere_config(max_iters=500)
    assert format_trace(run_rgd(cfg)) == format_trace(run_rgd(cfg))


def test_written_values_read_back_exactly(tmp_path):
    trace = run_rgd(sphere_config(max_iters=300, record_x=True))
    path = write_trace(trace, tmp_path / "sub" / "trace.csv", with_x=True)
    back = read_trace(path)
    np.testing.assert_array_equal(back.k, trace.k)
    np.testing.assert_array_equal(back.gap, trace.gap)
    np.testing.assert_array_equal(back.x, trace.x)
    assert back.meta.method == "file"


def test_missing_minimizer_columns_are_empty(tmp_path):
    path = tmp_path / "t.csv"
    write_trace(make_trace([0, 1], [1.0, 0.5], column="f_value"), path)
    assert read_trace(path).gap is None


def _write(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text, encoding="utf-8")
    return path


def test_malformed_field_reports_row(tmp_path):
    header = ",".join(BASE_COLUMNS)
    path = _write(tmp_path, f"{header}\n0,1,1,0,0,0,\n1,abc,1,0,0,0,\n")
    with pytest.raises(ConfigError, match="第 3 行"):
        read_trace(path)


def test_missing_columns(tmp_path):
    with pytest.raises(ConfigError, match="grad_norm"):
        read_trace(_write(tmp_path, "k,f_value,gap\n0,1,1\n"))


def test_missing_or_empty_file(tmp_path):
    with pytest.raises(ConfigError):
        read_trace(tmp_path / "nope.csv")
    with pytest.raises(ConfigError):
        read_trace(_write(tmp_path, ""))


def test_k_must_increase(tmp_path):
    header = ",".join(BASE_COLUMNS)
    with pytest.raises(ConfigError):
        read_trace(_write(tmp_path, f"{header}\n0,1,1,0,0,0,\n0,1,1,0,0,0,\n"))
