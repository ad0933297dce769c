"""Run outputs: diagnostics CSV, profile snapshots, manifest and checkpoints.

Every file carries a ``# config-sha256=<hex>`` comment identifying the
resolved scenario that produced it.  In the CSV tables it is the last line,
so the column header stays on line one.  Floats are written with 17 significant
digits, so reading them back is exact.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .basis import uniform_grid
from .diagnostics import CSV_COLUMNS
from .rhs import GalerkinState, SystemParams

__all__ = [
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "CheckpointError",
    "checkpoint_load",
    "checkpoint_save",
    "digest_of",
    "fmt",
    "read_csv",
    "write_diagnostics",
    "write_manifest",
    "write_snapshot",
]

CHECKPOINT_VERSION = 1
_MAGIC = "# twofilm checkpoint"


def fmt(x):
    return format(float(x), ".17g")


def digest_of(path):
    """The config digest recorded in an output file, or None."""
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("# config-sha256="):
                return line.strip()[len("# config-sha256="):]
    return None


def _hash_line(digest):
    return f"# config-sha256={digest}\n"


def write_diagnostics(path, rows, digest):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row.values()) + "\n")
        fh.write(_hash_line(digest))
    return path


def write_snapshot(path, state, basis, digest, points=256):
    x = uniform_grid(basis.L, points)
    f = basis.evaluate(state.F, x)
    g = basis.evaluate(state.G, x)
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(_hash_line(digest))
        fh.write(f"# t={fmt(state.t)}\n")
        fh.write("x,f,g\n")
        for row in zip(x, f, g):
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_manifest(path, cfg, extra=None):
    doc = {
        "config": cfg.resolved(),
        "config_sha256": cfg.digest(),
        "source": cfg.source,
        "version": __version__,
    }
    doc.update(extra or {})
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_csv(path):
    """Columns of a CSV written by this package, as float arrays keyed by name."""
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    cols = {h: [] for h in header}
    for rec in reader:
        for h, v in zip(header, rec):
            try:
                cols[h].append(float(v))
            except ValueError:
                cols[h].append(np.nan)
    return {h: np.array(v) for h, v in cols.items()}


class CheckpointError(ValueError):
    """A checkpoint file that cannot be read back."""

    def __init__(self, message, line=None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(message + where)


@dataclass(frozen=True)
class Checkpoint:
    state: GalerkinState
    params: SystemParams
    dt_next: float | None
    config_sha256: str | None
    energy_slack: float | None = None


_HEADER_KEYS = ("format_version", "n", "L", "eps", "R", "mu", "t", "dt_next", "energy_slack", "config_sha256")


def _opt(v):
    return fmt(v) if v is not None else "none"


def checkpoint_save(state, params, path, dt_next=None, digest=None, energy_slack=None):
    """Write ``state`` plus the controller data needed to resume exactly."""
    lines = [
        _MAGIC,
        f"format_version = {CHECKPOINT_VERSION}",
        f"n = {state.n}",
        f"L = {fmt(params.L)}",
        f"eps = {fmt(params.eps)}",
        f"R = {fmt(params.R)}",
        f"mu = {fmt(params.mu)}",
        f"t = {fmt(state.t)}",
        f"dt_next = {_opt(dt_next)}",
        f"energy_slack = {_opt(energy_slack)}",
        f"config_sha256 = {digest or 'none'}",
        "coefficients  # k F_k G_k",
    ]
    for k, (a, b) in enumerate(zip(state.F, state.G)):
        lines.append(f"{k} {fmt(a)} {fmt(b)}")
    lines.append("end")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def checkpoint_load(path, n=None):
    """Read a checkpoint; with ``n`` larger than stored, coefficients are zero padded."""
    try:
        raw = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not raw or raw[0].strip() != _MAGIC:
        raise CheckpointError("not a checkpoint file", 1)
    header = {}
    lineno = 1
    for key in _HEADER_KEYS:
        lineno += 1
        if lineno > len(raw):
            raise CheckpointError(f"file ends before header key '{key}'", lineno)
        name, sep, value = raw[lineno - 1].partition("=")
        if not sep or name.strip() != key:
            raise CheckpointError(f"expected header key '{key}'", lineno)
        header[key] = value.strip()
    if header["format_version"] != str(CHECKPOINT_VERSION):
        raise CheckpointError(
            f"format version {header['format_version']} is not supported "
            f"(expected {CHECKPOINT_VERSION})",
            2,
        )
    lineno += 1
    if lineno > len(raw) or not raw[lineno - 1].startswith("coefficients"):
        raise CheckpointError("missing 'coefficients' marker", lineno)
    try:
        stored_n = int(header["n"])
        params = SystemParams(
            R=float(header["R"]), mu=float(header["mu"]), L=float(header["L"]), eps=float(header["eps"])
        )
        t = float(header["t"])
    except ValueError as exc:
        raise CheckpointError(f"bad header value: {exc}") from exc
    F = np.zeros(stored_n + 1)
    G = np.zeros(stored_n + 1)
    for k in range(stored_n + 1):
        lineno += 1
        if lineno > len(raw):
            raise CheckpointError(f"truncated: coefficient row {k} of {stored_n} missing", lineno)
        parts = raw[lineno - 1].split()
        if len(parts) != 3 or parts[0] != str(k):
            raise CheckpointError(f"malformed coefficient row {k}", lineno)
        try:
            F[k], G[k] = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise CheckpointError(f"bad number in coefficient row {k}", lineno) from exc
    lineno += 1
    if lineno > len(raw) or raw[lineno - 1].strip() != "end":
        raise CheckpointError("truncated: missing 'end' marker", lineno)
    state = GalerkinState(F, G, t)
    if n is not None and n != stored_n:
        if n < stored_n:
            raise CheckpointError(f"cannot load {stored_n} modes into a run with {n}")
        state = state.padded(n)
    try:
        dt = None if header["dt_next"] == "none" else float(header["dt_next"])
        slack = None if header["energy_slack"] == "none" else float(header["energy_slack"])
    except ValueError as exc:
        raise CheckpointError(f"bad header value: {exc}") from exc
    digest = None if header["config_sha256"] == "none" else header["config_sha256"]
    return Checkpoint(state, params, dt, digest, slack)
