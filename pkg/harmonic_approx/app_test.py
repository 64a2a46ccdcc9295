import csv
import json

import pytest
from click.testing import CliRunner

from .handling_error import EXIT_OK, EXIT_VALIDATION
from .main import cli, parse_overrides

runner = CliRunner()

FAST_APPROX = ["--conv_grid", "0.03125", "--eval_grid", "0.0625", "--bvp_spacing", "0.0078125"]


def read_table(path):
    with open(path) as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.DictReader(lines))


def invoke(*args):
    return runner.invoke(cli, list(args), catch_exceptions=False)


def test_kernel(tmp_path):
    result = invoke("kernel", "--k", "3", "--nu", "4", "--nu_list", "4,8,16", "--out", str(tmp_path))
    assert result.exit_code == EXIT_OK
    text = (tmp_path / "kernel.csv").read_text()
    assert text.startswith("# manifest: config_hash=")
    assert "order=10" in text
    rows = read_table(tmp_path / "kernel.csv")
    assert rows[0]["basis"] == "monomial_s"
    assert {row["order"] for row in rows} == {"10"}
    rates = read_table(tmp_path / "kernel_moment_rates.csv")
    assert [row["i"] for row in rates] == ["1", "2"]
    assert (tmp_path / "kernel_manifest.jsonl").exists()


def test_high_degree_kernel_is_written_in_chebyshev_form(tmp_path):
    result = invoke("kernel", "--k", "4", "--nu", "16", "--nu_list", "4,8,16", "--out", str(tmp_path))
    assert result.exit_code == EXIT_OK
    assert "basis=chebyshev_y" in (tmp_path / "kernel.csv").read_text()
    rows = read_table(tmp_path / "kernel.csv")
    assert len(rows) == 61
    assert {row["basis"] for row in rows} == {"chebyshev_y"}
    assert {row["order"] for row in rows} == {"61"}


def test_kernel_output_is_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert invoke("kernel", "--nu_list", "4,8,16", "--out", str(out)).exit_code == EXIT_OK
    assert (first / "kernel.csv").read_bytes() == (second / "kernel.csv").read_bytes()
    assert (first / "kernel_moments.csv").read_bytes() == (second / "kernel_moments.csv").read_bytes()


def test_approx_on_harmonic_field(tmp_path):
    result = invoke("approx", "--field_id", "linear", "--p", "8", *FAST_APPROX, "--out", str(tmp_path), "--dump-grid")
    assert result.exit_code == EXIT_OK
    (row,) = read_table(tmp_path / "approx.csv")
    assert float(row["sup_error"]) <= 1e-6
    assert row["degenerate"] == "true"
    assert len(read_table(tmp_path / "approx_stages.csv")) == 1
    assert (tmp_path / "approx_grid_T_p.csv").exists()
    (record,) = [json.loads(line) for line in (tmp_path / "approx_manifest.jsonl").read_text().splitlines()]
    assert record["nu"] == int(row["nu"]) == 3
    assert record["sup_error"] == pytest.approx(float(row["sup_error"]))
    assert len(record["per_stage_errors"]) == 1
    assert record["per_stage_errors"][-1] == record["sup_error"]


def test_rates(tmp_path):
    result = invoke("rates", "--p_list", "4,8,16", *FAST_APPROX, "--out", str(tmp_path))
    assert result.exit_code == EXIT_OK
    rows = read_table(tmp_path / "rates.csv")
    assert [row["p"] for row in rows] == ["4", "8", "16"]
    assert all(row["omega_h_le_classical"] == "true" for row in rows)
    assert float(rows[0]["slope"]) < 0


def test_modulus(tmp_path):
    result = invoke("modulus", "--field_id", "sine_product", "--x_density", "0.125", "--out", str(tmp_path))
    assert result.exit_code == EXIT_OK
    rows = read_table(tmp_path / "modulus.csv")
    assert len(rows) == 5
    for row in rows:
        assert float(row["omega_h"]) <= min(float(row["omega_1"]), float(row["omega_2"])) + 1e-12
        assert float(row["omega_h"]) <= float(row["laplacian_bound"]) * (1 + 1e-9)


def test_kfunc(tmp_path):
    result = invoke("kfunc", "--x_density", "0.125", "--out", str(tmp_path))
    assert result.exit_code == EXIT_OK
    rows = read_table(tmp_path / "kfunc.csv")
    assert len(rows) == 4
    assert all(float(row["ratio_upper"]) <= float(row["c_upper"]) for row in rows)
    assert all(row["ratio_thm3"] == row["ratio_upper"] and row["ratio_lemma1"] == row["ratio_lower"] for row in rows)
    assert len(read_table(tmp_path / "kfunc_scaling.csv")) == 3


def test_pizzetti(tmp_path):
    result = invoke("pizzetti", "--n_pairs", "5", "--field_id", "radial_quartic", "--out", str(tmp_path))
    assert result.exit_code == EXIT_OK
    rows = read_table(tmp_path / "pizzetti.csv")
    assert len(rows) == 5
    assert all(abs(float(row["pizzetti_residual"])) < 1e-8 for row in rows)
    assert len(read_table(tmp_path / "pizzetti_j0.csv")) == 3


def test_pizzetti_needs_laplacian(tmp_path):
    result = invoke("pizzetti", "--field_id", "cone", "--out", str(tmp_path))
    assert result.exit_code == EXIT_VALIDATION


def test_config_file(tmp_path):
    config = tmp_path / "kernel.env"
    config.write_text("K=2\nnu=3\nnu_list=4,8,16\n")
    result = invoke("kernel", "--config", str(config), "--out", str(tmp_path / "out"))
    assert result.exit_code == EXIT_OK
    assert "k=2, nu=3" in (tmp_path / "out" / "kernel.csv").read_text()


@pytest.mark.parametrize(
    "args",
    [
        ["kernel", "--dim", "7"],
        ["kernel", "--foo", "1"],
        ["kernel", "--config", "no/such/file.env"],
        ["modulus", "--field_id", "harmonic_re_z3", "--dim", "3"],
        ["approx", "--p", "1", "--r", "1"],
    ],
)
def test_bad_input_exits_with_validation_code(tmp_path, args):
    result = invoke(*args, "--out", str(tmp_path))
    assert result.exit_code == EXIT_VALIDATION
    assert not any(tmp_path.iterdir())


def test_parse_overrides():
    assert parse_overrides(["--p", "8", "--field-id=gauss_bump"]) == {"p": "8", "field-id": "gauss_bump"}


def test_version():
    result = invoke("--version")
    assert result.exit_code == EXIT_OK
    assert "1.0.0" in result.output
