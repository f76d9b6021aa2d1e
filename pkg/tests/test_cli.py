import csv
import json

import numpy as np
import pytest
import yaml

from neqcasimir import cli
from neqcasimir.basis import SPEED_OF_LIGHT, ModeGrid
from neqcasimir.errors import AccuracyError, ResonanceError
from neqcasimir.scattering import save_block_matrix
from neqcasimir.testing import random_reciprocal_passive

BASE = {
    "version": 1,
    "plate1": {"material": "gold"},
    "plate2": {"material": "gold"},
    "gaps": [1e-7],
    "T1": 300,
    "T2": 300,
    "observables": ["force_eq", "delta_force"],
    "quadrature": {"rel_tol": 1e-4},
    "output": {"directory": "out"},
}


def _write(tmp_path, **changes):
    cfg = dict(BASE, **changes)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_validate_ok(tmp_path, capsys):
    assert cli.main(["validate", "--config", str(_write(tmp_path))]) == 0
    assert "1 point(s)" in capsys.readouterr().out


def test_validate_collects_every_problem(tmp_path, capsys):
    path = _write(tmp_path, plate2={"table": "missing.csv"}, colour="red", observables=["force_eq", "torque"],
                  gaps=[-1.0])
    assert cli.main(["validate", "--config", str(path)]) == 2
    err = json.loads(capsys.readouterr().err)["error"]
    text = "\n".join(err["problems"])
    assert err["type"] == "ConfigError"
    for needle in ("colour", "missing.csv", "torque", "gaps[0]"):
        assert needle in text


def test_missing_config_file(tmp_path):
    assert cli.main(["validate", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_compute_gold(tmp_path):
    path = _write(tmp_path)
    assert cli.main(["compute", "--config", str(path)]) == 0
    rows = _rows(tmp_path / "out" / "run_results.csv")
    force = [r for r in rows if r["observable"] == "force_eq"]
    delta = [r for r in rows if r["observable"] == "delta_force"]
    assert float(force[0]["value_SI"]) < 0 and force[0]["unit"] == "Pa"
    assert int(force[0]["matsubara_terms"]) > 3
    assert delta[0]["value_SI"] == "0.0"
    meta = json.loads((tmp_path / "out" / "run_meta.json").read_text())
    assert meta["rows"] == 2 and meta["quadrature"]["rel_tol"] == 1e-4


def test_compute_is_byte_reproducible(tmp_path):
    path = _write(tmp_path, plate1={"material": "sic"}, T1=350, observables=["heat_power"],
                  gaps=[1e-7, 1e-6])
    assert cli.main(["compute", "--config", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["compute", "--config", str(path), "--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for name in ("run_results.csv",):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    a = json.loads((tmp_path / "a" / "run_meta.json").read_text())
    b = json.loads((tmp_path / "b" / "run_meta.json").read_text())
    a.pop("threads"), b.pop("threads")
    assert a == b


def test_output_precedence(tmp_path, monkeypatch):
    path = _write(tmp_path, observables=["delta_force"])
    monkeypatch.setenv(cli.ENV_OUTPUT, str(tmp_path / "env"))
    assert cli.main(["compute", "--config", str(path)]) == 0
    assert (tmp_path / "env" / "run_results.csv").exists()
    assert cli.main(["compute", "--config", str(path), "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "run_results.csv").exists()
    assert not (tmp_path / "out").exists()


def test_sweep_dedupes_and_matches_plain_run(tmp_path):
    swept = _write(tmp_path, observables=["delta_force"], T1=310, plate1={"material": "sic"},
                   sweep={"axis": "gap", "values": [1e-6, 1e-6]})
    assert cli.main(["compute", "--config", str(swept), "--out", str(tmp_path / "s")]) == 0
    meta = json.loads((tmp_path / "s" / "run_meta.json").read_text())
    assert any("duplicate" in w for w in meta["warnings"])
    plain = _write(tmp_path, observables=["delta_force"], T1=310, plate1={"material": "sic"}, gaps=[1e-6])
    assert cli.main(["compute", "--config", str(plain), "--out", str(tmp_path / "p")]) == 0
    assert _rows(tmp_path / "s" / "run_results.csv") == _rows(tmp_path / "p" / "run_results.csv")


def test_spectra_output(tmp_path):
    path = _write(tmp_path, plate1={"material": "sic"}, T1=350, observables=["spectra"],
                  spectra={"points": 3, "omega_min": 1e14, "omega_max": 2e14})
    assert cli.main(["compute", "--config", str(path)]) == 0
    files = list((tmp_path / "out").glob("run_spectra_*.csv"))
    assert len(files) == 1
    rows = _rows(files[0])
    assert len(rows) == 3 and all(float(r["H_kernel_m^-2"]) > 0 for r in rows)
    assert list(rows[0]) == cli.SPECTRA_HEADER


def test_block_file_plates_spectra_only(tmp_path):
    rng = np.random.default_rng(1)
    d, q = 1e-6, 1e14 / SPEED_OF_LIGHT
    m = np.arange(-1, 2)
    kv = np.stack([np.stack([x + 2 * np.pi * m / d, np.full(3, y)], -1) for x, y in ((1e5, 0.1 * q), (-1e5, -0.1 * q))])
    S = random_reciprocal_passive(ModeGrid(1e14, kv, [0.5, 0.5]), rng)
    save_block_matrix(S, tmp_path / "grating.json", d, 1)
    path = _write(tmp_path, plate1={"file": "grating.json"}, plate2={"file": "grating.json"}, T1=350)
    assert cli.main(["validate", "--config", str(path)]) == 2
    path = _write(tmp_path, plate1={"file": "grating.json"}, plate2={"file": "grating.json"}, T1=350,
                  observables=["spectra"])
    assert cli.main(["compute", "--config", str(path)]) == 0
    rows = _rows(next((tmp_path / "out").glob("run_spectra_*.csv")))
    assert len(rows) == 1 and float(rows[0]["omega_rad_s"]) == 1e14


def test_oracle_blackbody(capsys):
    assert cli.main(["oracle", "--case", "blackbody"]) == 0
    assert capsys.readouterr().out.startswith("PASS blackbody")


@pytest.mark.parametrize("exc, code", [(ResonanceError("cavity mode", omega=1e14), 4),
                                       (AccuracyError("no convergence", partial=1.0, error=0.5), 3)])
def test_error_exit_codes(tmp_path, monkeypatch, capsys, exc, code):
    def boom(*args):
        raise exc

    monkeypatch.setattr(cli, "_evaluate", boom)
    assert cli.main(["compute", "--config", str(_write(tmp_path))]) == code
    err = json.loads(capsys.readouterr().err)["error"]
    assert err["type"] == type(exc).__name__


def test_rel_tol_override(tmp_path):
    path = _write(tmp_path, observables=["force_eq"])
    assert cli.main(["compute", "--config", str(path), "--rel-tol", "1e-3"]) == 0
    assert _rows(tmp_path / "out" / "run_results.csv")[0]["rel_tol"] == "0.001"
