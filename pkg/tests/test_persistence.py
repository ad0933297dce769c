import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twofilm.config import reference_config
from twofilm.diagnostics import CSV_COLUMNS
from twofilm.persistence import (
    CheckpointError,
    checkpoint_load,
    checkpoint_save,
    digest_of,
    fmt,
    read_csv,
    write_diagnostics,
    write_manifest,
    write_snapshot,
)
from twofilm.rhs import GalerkinState, SystemParams

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(x=finite)
def test_fmt_round_trips(x):
    assert float(fmt(x)) == x


@settings(max_examples=30)
@given(F=st.lists(finite, min_size=1, max_size=20), t=st.floats(0, 1e6))
def test_checkpoint_round_trip(tmp_path_factory, F, t):
    F = np.array(F)
    G = F[::-1] * 0.5
    p = SystemParams(1.5, 0.3, 2.0, 0.01)
    path = tmp_path_factory.mktemp("ck") / "c.txt"
    checkpoint_save(GalerkinState(F, G, t), p, path, dt_next=1.25e-3, digest="ab" * 32, energy_slack=3e-11)
    ck = checkpoint_load(path)
    assert np.array_equal(ck.state.F, F) and np.array_equal(ck.state.G, G)
    assert ck.state.t == t and ck.params == p
    assert ck.dt_next == 1.25e-3 and ck.energy_slack == 3e-11 and ck.config_sha256 == "ab" * 32


def test_reference_state_round_trip(reference_run, tmp_path):
    cfg, basis, record = reference_run
    mid = min(record.step_states, key=lambda s: abs(s.t - 0.05))
    path = checkpoint_save(mid, cfg.params, tmp_path / "c.txt", 1e-3, cfg.digest())
    back = checkpoint_load(path)
    assert np.array_equal(back.state.F, mid.F) and np.array_equal(back.state.G, mid.G)
    assert back.state.t == mid.t
    assert back.dt_next == 1e-3 and back.energy_slack is None
    text = path.read_text().splitlines()
    assert text[0] == "# twofilm checkpoint" and text[1] == "format_version = 1"


def test_promotion_zero_pads(tmp_path):
    s = GalerkinState(np.arange(17.0), -np.arange(17.0), 0.3)
    path = checkpoint_save(s, SystemParams(1, 1, 1, 0.01), tmp_path / "c.txt")
    big = checkpoint_load(path, n=32).state
    assert big.n == 32
    assert np.array_equal(big.F[:17], s.F) and np.all(big.F[17:] == 0) and np.all(big.G[17:] == 0)
    with pytest.raises(CheckpointError):
        checkpoint_load(path, n=8)


def _saved(tmp_path):
    s = GalerkinState(np.linspace(0, 1, 5), np.linspace(1, 2, 5), 0.1)
    return checkpoint_save(s, SystemParams(1, 1, 1, 0.01), tmp_path / "c.txt")


@pytest.mark.parametrize("keep", [3, 8, 13, 16])
def test_truncation_names_line(tmp_path, keep):
    path = _saved(tmp_path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:keep]) + "\n")
    with pytest.raises(CheckpointError) as exc:
        checkpoint_load(path)
    assert exc.value.line == keep + 1
    assert f"line {keep + 1}" in str(exc.value)


def test_version_mismatch_and_garbage(tmp_path):
    path = _saved(tmp_path)
    path.write_text(path.read_text().replace("format_version = 1", "format_version = 9"))
    with pytest.raises(CheckpointError, match="version"):
        checkpoint_load(path)
    path.write_text("hello\n")
    with pytest.raises(CheckpointError):
        checkpoint_load(path)
    path.write_text(_saved(tmp_path).read_text().replace("\n2 ", "\n2 abc "))
    with pytest.raises(CheckpointError):
        checkpoint_load(path)
    with pytest.raises(CheckpointError):
        checkpoint_load(tmp_path / "missing.txt")


def test_diagnostics_csv(reference_run, tmp_path):
    cfg, basis, record = reference_run
    path = write_diagnostics(tmp_path / "d.csv", record.rows[:5], cfg.digest())
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[-1] == f"# config-sha256={cfg.digest()}"
    assert digest_of(path) == cfg.digest()
    data = read_csv(path)
    assert np.array_equal(data["energy"], [r.energy for r in record.rows[:5]])


def test_snapshot_and_manifest(reference_run, tmp_path):
    cfg, basis, record = reference_run
    s = record.snapshots[-1]
    path = write_snapshot(tmp_path / "s.csv", s, basis, cfg.digest())
    data = read_csv(path)
    assert list(data) == ["x", "f", "g"] and data["x"].size == 256
    assert np.array_equal(data["f"], basis.evaluate(s.F, data["x"]))
    m = json.loads(write_manifest(tmp_path / "m.json", cfg, {"status": "ok"}).read_text())
    assert m["config_sha256"] == cfg.digest() and m["status"] == "ok" and m["version"]
    assert m["config"]["system"]["eps"] == 0.01
