"""Batch drivers behind the command line: single runs, eps sweeps, mode studies.

Every driver writes into its own directory and never touches anything else, so
sweep members can run on a thread pool.  Summaries are assembled afterwards in
the order the values were listed.

Sweep files use the same INI dialect as scenarios::

    [sweep]
    variable = eps            # or: modes
    values = 0.1, 0.03, 0.01
    base = reference.ini      # scenario file, or the built-in name "reference"
    # output = summary.csv    (relative to the sweep output directory)
    # t_final = 0.1           (optional override of the base scenario)
"""

from __future__ import annotations

import configparser
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .basis import uniform_grid
from .config import ConfigError, load_config, initial_state, reference_config
from .diagnostics import energy
from .integrator import StiffnessAbort, integrate, resume_controls
from .persistence import checkpoint_load, checkpoint_save, fmt, write_diagnostics, write_manifest, write_snapshot
from .rhs import NumericError

__all__ = [
    "EXIT_CONFIG",
    "EXIT_NEGATIVE",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "EXIT_STIFF",
    "RunResult",
    "SweepSpec",
    "converge_modes",
    "load_sweep_spec",
    "parse_sweep_spec",
    "simulate",
    "sweep_eps",
    "tolerance_study",
]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NEGATIVE, EXIT_STIFF, EXIT_NUMERIC = 0, 2, 3, 4, 5
_EXIT_FOR_STATUS = {"completed": EXIT_OK, "stiffness-abort": EXIT_STIFF, "numeric-error": EXIT_NUMERIC}

SWEEP_COLUMNS = (
    "eps", "status", "chi_f", "chi_g", "min_f", "min_g", "energy", "chi_f_over_eps", "chi_g_over_sqrt_eps",
)
MODES_COLUMNS = (
    "n", "n_next", "status", "profile_diff_f", "profile_diff_g", "profile_diff", "coeff_diff",
)


@dataclass
class RunResult:
    status: str
    output_dir: Path
    record: object = None
    final_state: object = None
    message: str = ""
    files: list = field(default_factory=list)

    @property
    def exit_code(self):
        return _EXIT_FOR_STATUS.get(self.status, EXIT_NUMERIC)

    @property
    def final_row(self):
        return self.record.rows[-1] if self.record is not None and self.record.rows else None


def _checkpoint_observer(at, path, params, digest, slack, written):
    def observe(event, state, record):
        if event == "step" and not written and state.t >= at:
            checkpoint_save(state, params, path, record.dt_next, digest, slack)
            written.append(path)

    return observe


def _snapshot_observer(out, basis, digest, written):
    snap_dir = out / "snapshots"

    def observe(event, state, record):
        if event != "snapshot":
            return
        snap_dir.mkdir(exist_ok=True)
        p = snap_dir / f"snapshot_{len(written):04d}.csv"
        write_snapshot(p, state, basis, digest)
        written.append(p)

    return observe


def simulate(cfg, output_dir=None, checkpoint_at=None, resume_from=None):
    """Run one scenario and write its outputs.

    Raises ``NegativeInitialData`` before anything is written.  Stiffness and
    numeric failures do not raise: whatever was produced up to that point is
    written and the status says what happened.
    """
    out = cfg.resolve_output_dir(output_dir)
    basis = cfg.basis()
    controls = cfg.controls
    digest = cfg.digest()
    if resume_from is not None:
        ckpt = checkpoint_load(resume_from, n=cfg.n)
        if ckpt.params != cfg.params:
            raise ConfigError(f"checkpoint parameters {ckpt.params} differ from the scenario's {cfg.params}")
        if ckpt.config_sha256 and ckpt.config_sha256 != digest:
            log.warning("checkpoint was written by a different scenario (%s)", ckpt.config_sha256[:12])
        state0 = ckpt.state
        if ckpt.dt_next is not None:
            controls = resume_controls(controls, ckpt.dt_next)
        if ckpt.energy_slack is not None:
            controls = replace(controls, energy_slack=ckpt.energy_slack)
    else:
        state0 = initial_state(cfg, basis)
    if controls.energy_slack is None:
        # fix the slack from the starting energy so that a resumed run uses the same one
        controls = replace(controls, energy_slack=controls.slack_for(energy(state0, cfg.params)))
    slack = controls.energy_slack

    out.mkdir(parents=True, exist_ok=True)
    snaps, ckpts = [], []
    observers = [_snapshot_observer(out, basis, digest, snaps)]
    if checkpoint_at is not None:
        observers.append(
            _checkpoint_observer(checkpoint_at, out / "checkpoint_mid.txt", cfg.params, digest, slack, ckpts)
        )
    message = ""
    try:
        record = integrate(state0, cfg.params, basis, controls, observers)
    except (StiffnessAbort, NumericError) as exc:
        record = getattr(exc, "record", None)
        message = str(exc)
        if record is None:
            raise
    final = record.step_states[-1] if record.step_states else record.snapshots[-1]
    files = [write_diagnostics(out / "diagnostics.csv", record.rows, digest)]
    files += snaps + ckpts
    files.append(checkpoint_save(final, cfg.params, out / "checkpoint.txt", record.dt_next, digest, slack))
    manifest = {
        "status": record.status,
        "message": message,
        "accepted_steps": record.accepted,
        "rejected_steps": record.rejected,
        "t_reached": final.t,
        "energy_slack": slack,
        "resumed_from": str(resume_from) if resume_from is not None else None,
        "files": sorted(str(p.relative_to(out)) for p in files),
    }
    files.append(write_manifest(out / "manifest.json", cfg, manifest))
    if record.status != "completed":
        log.error("%s: %s", record.status, message)
    return RunResult(record.status, out, record, final, message, files)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    base: object  # ScenarioConfig
    output: str = "summary.csv"
    source: str | None = None

    def __post_init__(self):
        if self.variable not in ("eps", "modes"):
            raise ConfigError(f"sweep variable must be 'eps' or 'modes', got {self.variable!r}", "sweep.variable")
        if not self.values:
            raise ConfigError("sweep needs at least one value", "sweep.values")
        v = self.values
        inc = all(a < b for a, b in zip(v, v[1:]))
        dec = all(a > b for a, b in zip(v, v[1:]))
        if self.variable == "modes":
            # repeating a mode count is allowed: it is the determinism probe
            inc = all(a <= b for a, b in zip(v, v[1:]))
            dec = False
        if not (inc or dec):
            raise ConfigError(f"sweep values must be monotone, got {list(v)}", "sweep.values")

    def digest(self):
        blob = f"{self.variable}:{','.join(repr(v) for v in self.values)}:{self.base.digest()}"
        return hashlib.sha256(blob.encode()).hexdigest()

    def resolve_output_dir(self, override=None):
        if override:
            return Path(override)
        stem = Path(self.source).stem if self.source else f"sweep-{self.variable}"
        return self.base.replace(output_dir=None, source=stem).resolve_output_dir()


def parse_sweep_spec(text, source=None, base_dir="."):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source or "<sweep>")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse sweep spec: {exc}") from exc
    if not cp.has_section("sweep"):
        raise ConfigError("missing section [sweep]", "sweep")
    sec = cp["sweep"]
    for key in ("variable", "values", "base"):
        if key not in sec:
            raise ConfigError(f"missing key '{key}' in section [sweep]", f"sweep.{key}")
    variable = sec["variable"].strip()
    conv = int if variable == "modes" else float
    try:
        values = tuple(conv(v) for v in sec["values"].replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad sweep values: {sec['values']!r}", "sweep.values") from exc
    base_name = sec["base"].strip()
    if base_name == "reference":
        base = reference_config()
    else:
        p = Path(base_name)
        base = load_config(p if p.is_absolute() else Path(base_dir) / p)
    if "t_final" in sec:
        base = base.replace(t_final=float(sec["t_final"]))
    return SweepSpec(variable, values, base, sec.get("output", "summary.csv").strip(), source)


def load_sweep_spec(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec {path}: {exc}") from exc
    return parse_sweep_spec(text, source=str(path), base_dir=path.parent)


def _write_table(path, columns, rows, digest):
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
        fh.write(f"# config-sha256={digest}\n")
    return Path(path)


def _run_members(configs, dirs, threads):
    def one(args):
        cfg, d = args
        try:
            return simulate(cfg, d)
        except Exception as exc:  # a failed member is reported in its row
            log.error("sweep member %s failed: %s", d.name, exc)
            return RunResult("failed", d, message=str(exc))

    jobs = list(zip(configs, dirs))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]


def sweep_eps(spec, output_dir=None, threads=1):
    """One run per eps; returns ``(summary_path, rows, results)``."""
    if spec.variable != "eps":
        raise ConfigError(f"sweep-eps needs variable = eps, got {spec.variable!r}", "sweep.variable")
    for e in spec.values:
        if not 0.0 < e <= 1.0:
            raise ConfigError(f"eps values must lie in (0, 1], got {e}", "sweep.values")
    out = spec.resolve_output_dir(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = [spec.base.replace(params=spec.base.params.replace(eps=e)) for e in spec.values]
    dirs = [out / f"eps_{e:g}" for e in spec.values]
    results = _run_members(configs, dirs, threads)
    rows = []
    for e, res in zip(spec.values, results):
        last = res.final_row
        if last is None:
            rows.append((e, res.status) + (math.nan,) * 7)
            continue
        rows.append(
            (e, res.status, last.chi_f, last.chi_g, last.min_f, last.min_g, last.energy,
             last.chi_f / e, last.chi_g / math.sqrt(e))
        )
    path = _write_table(out / spec.output, SWEEP_COLUMNS, rows, spec.digest())
    return path, rows, results


def converge_modes(spec, output_dir=None, threads=1, points=256):
    """Run each mode count and compare consecutive final states."""
    if spec.variable != "modes":
        raise ConfigError(f"converge-modes needs variable = modes, got {spec.variable!r}", "sweep.variable")
    out = spec.resolve_output_dir(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = [spec.base.replace(n=n, cells=None) for n in spec.values]
    dirs = [out / f"modes_{i:02d}_n{n}" for i, n in enumerate(spec.values)]
    results = _run_members(configs, dirs, threads)
    L = spec.base.params.L
    x = uniform_grid(L, points)
    rows = []
    for (n0, r0), (n1, r1), c0, c1 in zip(
        zip(spec.values, results), zip(spec.values[1:], results[1:]), configs, configs[1:]
    ):
        if r0.status != "completed" or r1.status != "completed":
            rows.append((n0, n1, f"{r0.status}/{r1.status}") + (math.nan,) * 4)
            continue
        s0, s1 = r0.final_state, r1.final_state
        b0, b1 = c0.basis(), c1.basis()
        df = float(np.max(np.abs(b0.evaluate(s0.F, x) - b1.evaluate(s1.F, x))))
        dg = float(np.max(np.abs(b0.evaluate(s0.G, x) - b1.evaluate(s1.G, x))))
        m = min(n0, n1) + 1
        dc = float(max(np.max(np.abs(s0.F[:m] - s1.F[:m])), np.max(np.abs(s0.G[:m] - s1.G[:m]))))
        rows.append((n0, n1, "completed", df, dg, max(df, dg), dc))
    path = _write_table(out / spec.output, MODES_COLUMNS, rows, spec.digest())
    return path, rows, results


def tolerance_study(cfg, rel_tols, abs_ratio=1e-2):
    """Final states of in-memory runs at each relative tolerance (abs = rel * abs_ratio)."""
    basis = cfg.basis()
    state0 = initial_state(cfg, basis)
    finals = []
    for tol in rel_tols:
        controls = replace(cfg.controls, rel_tol=tol, abs_tol=tol * abs_ratio, keep_steps=False)
        finals.append(integrate(state0, cfg.params, basis, controls).final_state)
    return finals
