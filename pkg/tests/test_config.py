import logging

import numpy as np
import pytest

from twofilm.basis import uniform_grid
from twofilm.config import (
    ConfigError,
    NegativeInitialData,
    ProfileSpec,
    initial_state,
    load_config,
    parse_config,
    reference_config,
)

BASE = """
[system]
R = 1.0
mu = 1.0
L = 1.0
eps = 0.01

[discretization]
modes = 16

[time]
t_final = 0.1

[initial]
f = cosine-bump
f.level = 0.5
f.amplitude = 0.3
f.mode = 1
g = cosine-bump
g.level = 0.5
g.amplitude = 0.2
g.mode = 2
"""


def test_reference_file_matches_builtin(demo_configs):
    cfg = load_config(demo_configs / "reference.ini")
    ref = reference_config()
    assert cfg.params == ref.params and cfg.n == ref.n and cfg.initial_f == ref.initial_f
    b = cfg.basis()
    assert np.array_equal(initial_state(cfg, b).F, initial_state(ref, b).F)


def test_parse_defaults():
    cfg = parse_config(BASE)
    assert cfg.M_cells == 8 * 17
    assert cfg.controls.rel_tol == 1e-8 and cfg.controls.t_final == 0.1
    assert cfg.seed == 0 and cfg.output_dir is None


@pytest.mark.parametrize("key", ["eps", "modes", "t_final", "g"])
def test_missing_key_is_named(key):
    text = "\n".join(ln for ln in BASE.splitlines() if not ln.startswith(f"{key} ="))
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert key in str(exc.value)
    assert exc.value.key.endswith(key)


@pytest.mark.parametrize(
    "old,new",
    [("eps = 0.01", "eps = 0"), ("modes = 16", "modes = 0"), ("mu = 1.0", "mu = abc"), ("f = cosine-bump", "f = wavy")],
)
def test_bad_values(old, new):
    with pytest.raises(ConfigError):
        parse_config(BASE.replace(old, new))


def test_unparseable():
    with pytest.raises(ConfigError):
        parse_config("no sections here")
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.ini")


def test_negative_initial_data():
    cfg = parse_config(BASE.replace("f.level = 0.5", "f.level = 0.1"))
    with pytest.raises(NegativeInitialData) as exc:
        initial_state(cfg)
    assert exc.value.field == "f"
    assert exc.value.x == pytest.approx(1.0, abs=1e-3)
    assert exc.value.value == pytest.approx(-0.2, abs=1e-6)


def test_projection_recovers_cosines():
    cfg = reference_config()
    s = initial_state(cfg)
    assert s.F[0] == pytest.approx(0.5, rel=1e-14)
    assert s.F[1] == pytest.approx(0.3 / np.sqrt(2), rel=1e-13)
    assert s.G[2] == pytest.approx(0.2 / np.sqrt(2), rel=1e-13)
    assert np.max(np.abs(np.delete(s.F, [0, 1]))) <= 1e-14


def test_random_modes_reproducible():
    text = BASE.replace("f = cosine-bump", "f = random-modes\nf.modes = 5").replace("[initial]", "[initial]\nseed = 7")
    a, b = initial_state(parse_config(text)), initial_state(parse_config(text))
    assert np.array_equal(a.F, b.F)
    c = initial_state(parse_config(text.replace("seed = 7", "seed = 8")))
    assert not np.array_equal(a.F, c.F)


def test_compact_droplet_clip_and_reproject(caplog):
    text = BASE.replace("f = cosine-bump", "f = compact-droplet\nf.height = 0.5\nf.width = 0.2").replace(
        "f.level = 0.5", "f.level = 0.0"
    )
    cfg = parse_config(text)
    with caplog.at_level(logging.INFO, logger="twofilm.config"):
        s = initial_state(cfg)
    assert s.F[0] == pytest.approx(np.sqrt(1.0) * 0.5 * 0.2 * 4 / 3, rel=0.05)
    assert any("clip-and-reproject" in r.message for r in caplog.records)


def test_file_preset(tmp_path):
    x = uniform_grid(1.0, 101)
    np.savetxt(tmp_path / "f.txt", np.column_stack([x, 0.4 + 0.1 * np.cos(np.pi * x)]))
    text = BASE.replace("f = cosine-bump", "f = file\nf.path = f.txt")
    (tmp_path / "s.ini").write_text(text)
    s = initial_state(load_config(tmp_path / "s.ini"))
    assert s.F[1] == pytest.approx(0.1 / np.sqrt(2), rel=1e-3)
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("f = cosine-bump", "f = file"))


def test_digest_tracks_settings():
    a = reference_config()
    assert a.digest() == reference_config().digest()
    assert a.digest() != reference_config(eps=0.02).digest()
    assert a.digest() != reference_config(rel_tol=1e-9).digest()
    assert len(a.digest()) == 64


def test_output_dir_resolution(monkeypatch, tmp_path):
    cfg = parse_config(BASE + "\n[output]\ndir = out/run1\n", source="/x/scen.ini")
    monkeypatch.delenv("TWOFILM_OUTPUT_ROOT", raising=False)
    assert str(cfg.resolve_output_dir()) == "out/run1"
    monkeypatch.setenv("TWOFILM_OUTPUT_ROOT", str(tmp_path))
    assert cfg.resolve_output_dir() == tmp_path / "out/run1"
    assert str(cfg.resolve_output_dir("/elsewhere")) == "/elsewhere"
    bare = parse_config(BASE, source="/x/scen.ini")
    assert bare.resolve_output_dir() == tmp_path / "scen"


def test_profile_spec_rejects_unknown():
    with pytest.raises(ConfigError):
        ProfileSpec("triangle")
