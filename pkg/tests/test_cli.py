import csv

import numpy as np
import pytest

from tmspectra.cli import main
from tmspectra.mps import random_umps
from tmspectra.serialize import save_mps


def _write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture()
def saved_state(tmp_path):
    state = random_umps(6, 2, np.random.default_rng(70))
    path = tmp_path / "state.umps"
    save_mps(str(path), state, model="RANDOM", params=(), seed=70)
    return str(path)


def test_empty_config_is_a_validation_error(tmp_path, capsys):
    cfg = _write(tmp_path / "empty.yaml", "")
    code = main(["gs", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert "missing required keys" in err
    assert "model" in err and "params" in err and "D" in err


def test_missing_config_file(tmp_path, capsys):
    code = main(["gs", "--config", str(tmp_path / "nope.yaml"),
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_spectrum_csv_starts_at_zero_eps(tmp_path, saved_state):
    cfg = _write(tmp_path / "spec.yaml",
                 f"state: {saved_state}\nkind: regular\nm: 5\n")
    out = tmp_path / "out"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "spectrum.csv").read_bytes().decode().split("\r\n")
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "j,re_lambda,im_lambda,eps,phi,branch_id"
    first = lines[2].split(",")
    assert float(first[3]) == 0.0  # dominant eigenvalue normalized to one
    assert float(first[1]) == 1.0


def test_rerun_is_byte_identical(tmp_path, saved_state):
    cfg = _write(tmp_path / "spec.yaml",
                 f"state: {saved_state}\nkind: regular\nm: 5\n")
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["spectrum", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["spectrum", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "spectrum.csv").read_bytes() == (out2 / "spectrum.csv").read_bytes()


def test_mixed_spectrum_needs_symmetry(tmp_path, saved_state, capsys):
    cfg = _write(tmp_path / "spec.yaml",
                 f"state: {saved_state}\nkind: mixed\n")
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "symmetry" in capsys.readouterr().err


def test_corr_subcommand(tmp_path, saved_state):
    cfg = _write(tmp_path / "corr.yaml",
                 f"state: {saved_state}\noperator: sz\nn_max: 8\n")
    out = tmp_path / "out"
    assert main(["corr", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "corr.csv", newline="") as fh:
        fh.readline()  # hash comment
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8
    assert [int(r["n"]) for r in rows] == list(range(1, 9))


def test_oracle_dispersion(tmp_path):
    cfg = _write(tmp_path / "oracle.yaml",
                 "kind: dispersion\nmodel: XY\nparams: [0.3, 0.2]\nkpoints: 16\n")
    out = tmp_path / "out"
    assert main(["oracle", "--config", cfg, "--out", str(out)]) == 0
    text = (out / "oracle_summary.txt").read_text()
    assert text.startswith("config_sha256 = ")
    values = dict(line.split(" = ") for line in text.strip().splitlines())
    assert np.isclose(float(values["e0"]), -0.3550546044218022)
    lines = (out / "oracle_dispersion.csv").read_bytes().decode().split("\r\n")
    assert len([l for l in lines if l]) == 2 + 16


def test_peps_subcommand(tmp_path):
    cfg = _write(tmp_path / "peps.yaml", "lattice: square\nny: 3\nm: 3\n")
    out = tmp_path / "out"
    assert main(["peps", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "peps.csv", newline="") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    ground = min(rows, key=lambda r: float(r["eps"]))
    assert float(ground["eps"]) == 0.0
    assert ground["spin"] == "0"
    assert all(r["ny"] == "3" for r in rows)


def test_bad_operator_name(tmp_path, saved_state, capsys):
    cfg = _write(tmp_path / "corr.yaml",
                 f"state: {saved_state}\noperator: sq\nn_max: 4\n")
    assert main(["corr", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "operator" in capsys.readouterr().err
