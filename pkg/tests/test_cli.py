import json
import logging
from pathlib import Path

import numpy as np
import pytest

from laval_transonic.classes_fields import PotentialPlaneField
from laval_transonic.cli import convergence_study, main
from laval_transonic.config import load_config
from laval_transonic.constants import EXIT_CONFIG_ERROR, EXIT_SOLVER_FAILURE, EXIT_SUCCESS
from laval_transonic.error_processing import (ConfigError,
                                              FatalDeveloperError,
                                              OuterDivergenceError,
                                              SonicSetError,
                                              error_payload,
                                              fatal_developer_error,
                                              fatal_error_without_traceback)
from laval_transonic.field_io import read_field_csv, read_json, write_field_csv
from laval_transonic.fit_report import BOUND, fit_row

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

STRAIGHT = """
[nozzle]
kind = "straight_channel"
l_minus = -0.3
l_plus = 0.3
f0 = 1.0

[solver]
n_phi_minus = 16
n_psi = 8
n_phi_plus = 16
"""


def _config(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _invoke(tmp_path, capsys, *argv):
    status = main(["--log-file", str(tmp_path / "laval.log"), *argv])
    captured = capsys.readouterr()
    return status, captured.out.strip(), captured.err.strip()


def test_subsonic_run_of_the_straight_channel(tmp_path, capsys):
    status, out, _ = _invoke(tmp_path, capsys, "run", str(CONFIGS / "straight_channel.toml"),
                             "--mode", "subsonic", "--out", str(tmp_path / "runs"))
    assert status == EXIT_SUCCESS
    run_dir = Path(out)
    assert run_dir.parent == tmp_path / "runs"
    assert run_dir.name.startswith("subsonic-")
    manifest = read_json(run_dir / "manifest.json")
    assert manifest["status"] == "ok"
    assert manifest["config"]["run"]["mode"] == "subsonic"
    assert manifest["sha256"] == load_config(CONFIGS / "straight_channel.toml").with_overrides(
        mode="subsonic", output_dir=str(tmp_path / "runs")).digest()
    assert manifest["artifacts"][0] == "validation.json"
    field = read_field_csv(run_dir / "subsonic_field.csv")
    np.testing.assert_allclose(field.q, field.q[0, 0], rtol=1e-15)
    assert read_json(run_dir / "fit_report.json")["passed"]


def test_transonic_and_analyze_runs_of_the_straight_channel(tmp_path, capsys):
    config = _config(tmp_path, STRAIGHT)
    status, out, _ = _invoke(tmp_path, capsys, "run", config, "--out", str(tmp_path))
    assert status == EXIT_SUCCESS
    run_dir = Path(out)
    for name in ("subsonic_field.csv", "supersonic_field.csv", "transonic_field.csv",
                 "transonic_field.vtk", "residuals.json", "diagnostics.json"):
        assert (run_dir / name).is_file()
    diagnostics = read_json(run_dir / "diagnostics.json")
    assert diagnostics["exceptional_fraction"] == 1.0
    assert diagnostics["curvature_report"]["status"] == "vacuous"
    assert diagnostics["closure"]["curl_residual"] == 0.0
    assert "sonic_characteristics" not in diagnostics

    status, out, _ = _invoke(tmp_path, capsys, "run", config, "--mode", "analyze", "--out", str(tmp_path))
    assert status == EXIT_SUCCESS
    characteristics = read_json(Path(out) / "diagnostics.json")["sonic_characteristics"]
    assert 0 < len(characteristics) <= 5
    assert all(entry["coincident"] for entry in characteristics)


def test_dump_writes_snapshots(tmp_path, capsys):
    status, out, _ = _invoke(tmp_path, capsys, "run", _config(tmp_path, STRAIGHT),
                             "--mode", "supersonic", "--dump", "--out", str(tmp_path))
    assert status == EXIT_SUCCESS
    snapshots = sorted((Path(out) / "snapshots").glob("supersonic_*.csv"))
    assert snapshots


def test_invalid_configuration_exits_with_status_2(tmp_path, capsys):
    config = _config(tmp_path, STRAIGHT + "tol_outer = -1e-8\n")
    status, _, err = _invoke(tmp_path, capsys, "run", config, "--out", str(tmp_path / "runs"))
    assert status == EXIT_CONFIG_ERROR
    payload = json.loads(err.splitlines()[-1])
    assert payload["error"] == "ConfigError"
    assert payload["exit_code"] == EXIT_CONFIG_ERROR
    assert "tol_outer" in payload["message"]
    assert not (tmp_path / "runs").exists()


def test_inadmissible_nozzle_leaves_an_error_record(tmp_path, capsys):
    text = (CONFIGS / "default.toml").read_text().replace("lambda_minus = 3.0", "lambda_minus = 2.0")
    status, _, err = _invoke(tmp_path, capsys, "run", _config(tmp_path, text), "--out", str(tmp_path / "runs"))
    assert status == EXIT_CONFIG_ERROR
    assert "admissibility" in json.loads(err.splitlines()[-1])["message"]
    (run_dir,) = (tmp_path / "runs").iterdir()
    assert not read_json(run_dir / "validation.json")["passed"]
    assert read_json(run_dir / "error.json")["error"] == "ConfigError"
    assert read_json(run_dir / "manifest.json")["status"] == "error"


def test_missing_configuration_file(tmp_path, capsys):
    status, _, err = _invoke(tmp_path, capsys, "run", str(tmp_path / "absent.toml"))
    assert status == EXIT_CONFIG_ERROR
    assert json.loads(err.splitlines()[-1])["error"] == "ConfigError"


def test_converge_on_the_straight_channel_is_exact(tmp_path, capsys):
    status, out, _ = _invoke(tmp_path, capsys, "converge", _config(tmp_path, STRAIGHT),
                             "--levels", "3", "--out", str(tmp_path))
    assert status == EXIT_SUCCESS
    assert Path(out).name.startswith("convergence-")
    report = read_json(Path(out) / "convergence.json")
    assert report["passed"]
    assert [level["n_psi"] for level in report["levels"]] == [8, 16, 32]
    assert {part["status"] for part in report["parts"].values()} == {"exact"}


def test_convergence_study_needs_three_levels():
    config = load_config(CONFIGS / "straight_channel.toml")
    with pytest.raises(ConfigError):
        convergence_study(config, levels=2)
    with pytest.raises(ConfigError):
        convergence_study(config, parts=("viscous",))


def _oblique_field(gas):
    phi = np.linspace(-1.0, 1.0, 21)
    psi = np.linspace(0.0, 1.0, 11)
    grid_phi, grid_psi = np.meshgrid(phi, psi, indexing="ij")
    return PotentialPlaneField(phi=phi, psi=psi, q=gas.c_star * (1.0 + 0.3 * (grid_phi + grid_psi)))


def test_analyze_an_imported_field(tmp_path, capsys, gas):
    source = write_field_csv(tmp_path / "field.csv", _oblique_field(gas))
    status, out, _ = _invoke(tmp_path, capsys, "analyze", str(source), "--out", str(tmp_path / "report"))
    assert status == EXIT_SUCCESS
    assert Path(out) == tmp_path / "report" / "diagnostics.json"
    report = read_json(out)
    assert report["exceptional_fraction"] == 0.0
    assert len(report["sonic_points"]) == 11

    status, out, _ = _invoke(tmp_path, capsys, "analyze", str(source), "--tol", "1.0")
    assert status == EXIT_SUCCESS
    assert Path(out).parent == tmp_path
    assert read_json(out)["exceptional_fraction"] == 1.0


def test_analyze_without_a_sonic_line_fails(tmp_path, capsys, gas):
    field = _oblique_field(gas)
    subsonic = PotentialPlaneField(phi=field.phi, psi=field.psi, q=0.5 * field.q / field.q.max())
    source = write_field_csv(tmp_path / "subsonic.csv", subsonic)
    status, _, err = _invoke(tmp_path, capsys, "analyze", str(source))
    assert status == EXIT_SOLVER_FAILURE
    assert json.loads(err.splitlines()[-1])["error"] == "SonicSetError"


def test_field_csv_import_reorders_rows(tmp_path, gas):
    field = _oblique_field(gas)
    path = write_field_csv(tmp_path / "field.csv", field)
    header, *rows = path.read_text().splitlines()
    path.write_text("\n".join([header] + rows[::-1]) + "\n")
    imported = read_field_csv(path)
    np.testing.assert_array_equal(imported.phi, field.phi)
    np.testing.assert_array_equal(imported.q, field.q)


@pytest.mark.parametrize("text", [
    "",
    "phi,psi\n0,0\n",
    "phi,psi,q\n",
    "phi,psi,q\n0,0,abc\n",
    "phi,psi,q\n0,0,1\n0,1,1\n1,0,1\n",
    "phi,psi,q\n0,0,1\n0,1,1\n1,0,1\n1,0,1\n",
    "phi,psi,q\n0,0,1\n0,1,1\n1,0,1\n1,1,-1\n",
])
def test_malformed_field_files(tmp_path, text):
    path = tmp_path / "field.csv"
    path.write_text(text)
    with pytest.raises(ConfigError):
        read_field_csv(path)


def test_absent_field_file(tmp_path):
    with pytest.raises(ConfigError):
        read_field_csv(tmp_path / "absent.csv")


def test_fit_rows():
    x = np.linspace(0.1, 0.5, 20)
    row = fit_row("cubic", x, 2.0 * x ** 3, 3.0)
    assert row["status"] == "pass"
    assert row["measured"] == pytest.approx(3.0, rel=1e-10)
    assert row["coefficient"] == pytest.approx(2.0, rel=1e-10)
    assert fit_row("cubic", x, x ** 3, 2.0)["status"] == "fail"
    assert fit_row("zero", x, np.zeros_like(x), 3.0)["status"] == "not_applicable"
    bound = fit_row("bound", x, x ** 3, 3.2, kind=BOUND)
    assert bound["passed"] and bound["threshold"] == pytest.approx(2.88)


def test_error_payload_and_exit_codes(capsys, caplog):
    exc = OuterDivergenceError("outer iteration diverged", history=[np.float64(0.5), {"change": np.float64(2.0)}])
    payload = error_payload(exc)
    assert payload == {"error": "OuterDivergenceError", "message": "outer iteration diverged",
                       "exit_code": EXIT_SOLVER_FAILURE, "history": [0.5, {"change": 2.0}]}
    with caplog.at_level(logging.CRITICAL):
        assert fatal_error_without_traceback(SonicSetError("no sonic points")) == EXIT_SOLVER_FAILURE
    assert "FATAL ERROR" in caplog.text
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "SonicSetError"
    assert error_payload(ConfigError("bad"))["exit_code"] == EXIT_CONFIG_ERROR
    with pytest.raises(FatalDeveloperError):
        fatal_developer_error("unreachable")
