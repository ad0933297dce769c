"""Scenario files and initial-profile presets.

A scenario is an INI-style ``key = value`` file::

    [system]
    R = 1.0
    mu = 1.0
    L = 1.0
    eps = 0.01

    [discretization]
    modes = 16
    # cells = 136            (default 8 * (modes + 1))

    [time]
    t_final = 0.1
    # rel_tol = 1e-8, abs_tol = 1e-10, dt_init = 1e-6, dt_min = 1e-14,
    # energy_slack, snapshot_every, method = limex | dopri5, dt_max

    [initial]
    f = cosine-bump
    f.level = 0.5
    f.amplitude = 0.3
    f.mode = 1
    g = cosine-bump
    g.level = 0.5
    g.amplitude = 0.2
    g.mode = 2
    # seed = 0

    [output]
    # dir = runs/reference

Presets: ``flat`` (level), ``cosine-bump`` (level, amplitude, mode),
``compact-droplet`` (height, center, width, level), ``random-modes`` (level,
amplitude, modes; uses the seed) and ``file`` (path to nodal samples, one
``x value`` pair per line).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .basis import SpectralBasis, project, synthesize, uniform_grid
from .integrator import IntegratorControls
from .rhs import GalerkinState, SystemParams

__all__ = [
    "ConfigError",
    "NegativeInitialData",
    "ProfileSpec",
    "ScenarioConfig",
    "initial_state",
    "load_config",
    "parse_config",
    "reference_config",
]

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "TWOFILM_OUTPUT_ROOT"
PRESETS = ("flat", "cosine-bump", "compact-droplet", "random-modes", "file")
RESIDUAL_NEGATIVITY = 1e-10


class ConfigError(ValueError):
    """Scenario description that cannot be used as given."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NegativeInitialData(ValueError):
    def __init__(self, field_name, x, value):
        self.field = field_name
        self.x = float(x)
        self.value = float(value)
        super().__init__(f"initial {field_name} is negative at x={self.x:.6g} (value {self.value:.3e})")


@dataclass(frozen=True)
class ProfileSpec:
    preset: str
    level: float = 0.0
    amplitude: float = 0.0
    mode: int = 1
    height: float = 1.0
    center: float | None = None
    width: float | None = None
    modes: int = 4
    path: str | None = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {PRESETS}")

    def sample(self, x, L, stream=(0,)):
        """Raw (unprojected) profile at positions x.

        ``stream`` seeds the generator of the ``random-modes`` preset, so the
        same profile comes back on every call.
        """
        x = np.asarray(x, dtype=float)
        if self.preset == "flat":
            return np.full_like(x, self.level)
        if self.preset == "cosine-bump":
            return self.level + self.amplitude * np.cos(self.mode * np.pi * x / L)
        if self.preset == "compact-droplet":
            c = L / 2 if self.center is None else self.center
            w = L / 4 if self.width is None else self.width
            return self.level + self.height * np.maximum(0.0, 1.0 - ((x - c) / w) ** 2)
        if self.preset == "random-modes":
            rng = np.random.default_rng(list(stream))
            k = np.arange(1, self.modes + 1)
            r = rng.uniform(-1.0, 1.0, size=k.size) / k**2
            return self.level + self.amplitude * (np.cos(np.pi * np.outer(x, k) / L) @ r)
        data = np.loadtxt(self.path, ndmin=2)
        return np.interp(x, data[:, 0], data[:, 1])


@dataclass(frozen=True)
class ScenarioConfig:
    params: SystemParams
    n: int
    t_final: float
    controls: IntegratorControls
    initial_f: ProfileSpec
    initial_g: ProfileSpec
    cells: int | None = None
    seed: int = 0
    output_dir: str | None = None
    source: str | None = field(default=None, compare=False)

    @property
    def M_cells(self):
        return self.cells if self.cells is not None else 8 * (self.n + 1)

    def basis(self):
        return SpectralBasis.build(self.params.L, self.n, self.M_cells)

    def resolved(self):
        """Plain dict of every setting, defaults filled in."""
        c = asdict(self.controls)
        return {
            "system": asdict(self.params),
            "discretization": {"modes": self.n, "cells": self.M_cells},
            "time": c,
            "initial": {
                "f": asdict(self.initial_f),
                "g": asdict(self.initial_g),
                "seed": self.seed,
            },
        }

    def digest(self):
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        if "params" in changes or "t_final" in changes:
            d["controls"] = _replace_controls(d["controls"], t_final=d["t_final"])
        return ScenarioConfig(**d)

    def resolve_output_dir(self, override=None):
        if override:
            return Path(override)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if self.output_dir:
            p = Path(self.output_dir)
            return p if p.is_absolute() or not root else Path(root) / p
        stem = Path(self.source).stem if self.source else "run"
        return Path(root or "runs") / stem


def _replace_controls(controls, **changes):
    d = asdict(controls)
    d.update(changes)
    return IntegratorControls(**d)


_REQUIRED = {
    "system": ("R", "mu", "L", "eps"),
    "discretization": ("modes",),
    "time": ("t_final",),
    "initial": ("f", "g"),
}
_CONTROL_KEYS = {
    "rel_tol": float,
    "abs_tol": float,
    "dt_init": float,
    "dt_min": float,
    "dt_max": float,
    "energy_slack": float,
    "snapshot_every": float,
    "method": str,
    "max_steps": int,
}
_PROFILE_KEYS = {
    "level": float,
    "amplitude": float,
    "mode": int,
    "height": float,
    "center": float,
    "width": float,
    "modes": int,
    "path": str,
}


def _get(cp, section, key, conv=float):
    if not cp.has_section(section):
        raise ConfigError(f"missing section [{section}] (needed for key '{key}')", f"{section}.{key}")
    if not cp.has_option(section, key):
        raise ConfigError(f"missing key '{key}' in section [{section}]", f"{section}.{key}")
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r}", f"{section}.{key}") from exc


def _profile(cp, name, base_dir):
    preset = _get(cp, "initial", name, str).strip()
    kw = {}
    for key, conv in _PROFILE_KEYS.items():
        opt = f"{name}.{key}"
        if cp.has_option("initial", opt):
            kw[key] = _get(cp, "initial", opt, conv)
    if preset == "file":
        if "path" not in kw:
            raise ConfigError(f"preset 'file' needs key '{name}.path' in [initial]", f"initial.{name}.path")
        p = Path(kw["path"])
        kw["path"] = str(p if p.is_absolute() else Path(base_dir) / p)
    try:
        return ProfileSpec(preset, **kw)
    except ConfigError as exc:
        raise ConfigError(str(exc), f"initial.{name}") from exc


def parse_config(text, source=None, base_dir="."):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (R vs r)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    for section, keys in _REQUIRED.items():
        for key in keys:
            _get(cp, section, key, str)
    values = {k: _get(cp, "system", k) for k in ("R", "mu", "L", "eps")}
    try:
        params = SystemParams(**values)
    except ValueError as exc:
        raise ConfigError(str(exc), "system") from exc
    n = _get(cp, "discretization", "modes", int)
    if n < 1:
        raise ConfigError(f"modes must be >= 1, got {n}", "discretization.modes")
    cells = _get(cp, "discretization", "cells", int) if cp.has_option("discretization", "cells") else None
    t_final = _get(cp, "time", "t_final")
    ckw = {}
    for key, conv in _CONTROL_KEYS.items():
        if cp.has_option("time", key):
            ckw[key] = _get(cp, "time", key, conv)
    try:
        controls = IntegratorControls(t_final=t_final, **ckw)
    except ValueError as exc:
        raise ConfigError(str(exc), "time") from exc
    seed = _get(cp, "initial", "seed", int) if cp.has_option("initial", "seed") else 0
    out = cp.get("output", "dir", fallback=None)
    return ScenarioConfig(
        params=params,
        n=n,
        t_final=t_final,
        controls=controls,
        initial_f=_profile(cp, "f", base_dir),
        initial_g=_profile(cp, "g", base_dir),
        cells=cells,
        seed=seed,
        output_dir=out,
        source=source,
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path), base_dir=path.parent)


def reference_config(**overrides):
    """Two cosine bumps on (0, 1), R = mu = 1, eps = 0.01, 16 modes, T = 0.1."""
    params = SystemParams(R=1.0, mu=1.0, L=1.0, eps=overrides.pop("eps", 0.01))
    t_final = overrides.pop("t_final", 0.1)
    ckw = {k: overrides.pop(k) for k in list(overrides) if k in _CONTROL_KEYS}
    cfg = ScenarioConfig(
        params=params,
        n=overrides.pop("n", 16),
        t_final=t_final,
        controls=IntegratorControls(t_final=t_final, **ckw),
        initial_f=ProfileSpec("cosine-bump", level=0.5, amplitude=0.3, mode=1),
        initial_g=ProfileSpec("cosine-bump", level=0.5, amplitude=0.2, mode=2),
        source="reference",
    )
    return cfg.replace(**overrides) if overrides else cfg


def _project_profile(name, spec, cfg, basis, stream):
    L = cfg.params.L
    probe = np.concatenate([basis.nodes, uniform_grid(L, 1025)])
    raw_probe = spec.sample(probe, L, stream)
    i = int(np.argmin(raw_probe))
    if raw_probe[i] < 0.0:
        raise NegativeInitialData(name, probe[i], raw_probe[i])
    if spec.preset == "flat":
        # exact coefficients; projection would leave round-off in the higher modes
        coeffs = np.zeros(basis.size)
        coeffs[0] = spec.level * np.sqrt(L)
        return coeffs
    coeffs = project(spec.sample(basis.nodes, L, stream), basis)
    if spec.preset in ("compact-droplet", "file"):
        # truncated cosine series of a non-smooth profile undershoots; clip once and reproject
        nodal = synthesize(coeffs, basis)
        if nodal.min() < 0.0:
            coeffs = project(np.maximum(nodal, 0.0), basis)
            left = synthesize(coeffs, basis).min()
            if left < 0.0:
                level = logging.INFO if -left < RESIDUAL_NEGATIVITY else logging.WARNING
                log.log(level, "initial %s keeps negativity %.3e after clip-and-reproject", name, left)
    return coeffs


def initial_state(cfg, basis=None):
    """Project the configured profiles onto the Galerkin span."""
    basis = basis or cfg.basis()
    F = _project_profile("f", cfg.initial_f, cfg, basis, (cfg.seed, 0))
    G = _project_profile("g", cfg.initial_g, cfg, basis, (cfg.seed, 1))
    return GalerkinState(F, G, 0.0)
