import numpy as np
import pytest

from tmspectra.mps import random_umps
from tmspectra.serialize import load_mps, save_mps, sidecar_path


def test_round_trip_is_exact(tmp_path):
    state = random_umps(5, 3, np.random.default_rng(60))
    path = tmp_path / "state.umps"
    save_mps(str(path), state, model="XY", params=(0.3, 0.2),
             energy=-0.355, seed=7)
    loaded, meta = load_mps(str(path))
    assert np.array_equal(loaded.A, state.A)
    assert loaded.gauge == state.gauge
    assert loaded.injective == state.injective
    assert np.allclose(loaded.schmidt, state.schmidt)
    assert meta["model"] == "XY"
    assert meta["params"] == (0.3, 0.2)
    assert meta["energy"] == -0.355
    assert meta["seed"] == 7
    assert meta["D"] == 5 and meta["d"] == 3


def test_missing_sidecar_still_loads_tensor(tmp_path):
    state = random_umps(3, 2, np.random.default_rng(61))
    path = tmp_path / "bare.umps"
    save_mps(str(path), state)
    (tmp_path / "bare.umps.meta").unlink()
    loaded, meta = load_mps(str(path))
    assert np.array_equal(loaded.A, state.A)
    assert loaded.gauge == "none"
    assert meta == {}


def test_corrupt_container_rejected(tmp_path):
    path = tmp_path / "bad.umps"
    path.write_bytes(b"NOPE!" + b"\x00" * 12)
    with pytest.raises(ValueError, match="bad magic"):
        load_mps(str(path))
    path.write_bytes(b"UM")
    with pytest.raises(ValueError, match="truncated"):
        load_mps(str(path))


def test_truncated_payload_rejected(tmp_path):
    state = random_umps(3, 2, np.random.default_rng(62))
    path = tmp_path / "short.umps"
    save_mps(str(path), state)
    blob = path.read_bytes()
    path.write_bytes(blob[:-8])
    with pytest.raises(ValueError, match="payload"):
        load_mps(str(path))


def test_no_temp_files_left_behind(tmp_path):
    state = random_umps(3, 2, np.random.default_rng(63))
    save_mps(str(tmp_path / "a.umps"), state)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["a.umps", "a.umps.meta"]


def test_sidecar_path():
    assert sidecar_path("/x/y.umps") == "/x/y.umps.meta"
