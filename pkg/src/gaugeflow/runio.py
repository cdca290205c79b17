"""Config files, run orchestration, and serialization for film experiments.

Structured-text (TOML) configuration with documented keys, deterministic
CSV/JSON writers with versioned schemas, and a run manifest that is written
before the first data row.  The data outputs (energy series and snapshots)
are byte-identical across reruns of the same config; the manifest carries
timestamps and is exempt from that guarantee.
"""
from __future__ import annotations

import dataclasses
import datetime
import hashlib
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .deformation import GaugeSpec, TimeDerivSpec, VECTOR_GAUGES
from .errors import (BadConfig, GaugeflowError, ParseError, SchemaMismatch,
                     ValidationError)
from .flatflow import (FlowConfig, InitialCondition, Snapshot, Trajectory,
                       run)
from .frankoseen import FOParams

ENERGY_SCHEMA = "gaugeflow/energy/1"
SNAPSHOT_SCHEMA = "gaugeflow/snapshot/1"
MANIFEST_SCHEMA = "gaugeflow/manifest/1"
REPORT_SCHEMA = "gaugeflow/verify-report/1"

_FLOW_KEYS = {
    "gauge", "timederiv", "allow_inconsistent", "n", "h", "t_end",
    "tau_schedule", "tau_init", "tau_max", "ramp_factor", "ramp_every",
    "tau_min", "snapshot_times", "scheme", "dealias", "stop_gradnorm",
    "linear_solver_tolerance",
}
_PARAM_KEYS = {"K", "omega", "mobility"}
_INITIAL_KEYS = {"family", "winding", "width"}
_SECTIONS = {"flow": _FLOW_KEYS, "params": _PARAM_KEYS, "initial": _INITIAL_KEYS}


def _reject_unknown(section: str, table: dict, allowed: set[str]) -> None:
    for key in table:
        if key not in allowed:
            raise ValidationError(
                f"unknown key {section}.{key}; valid keys: "
                + ", ".join(sorted(allowed))
            )


def load_config(path: str | Path) -> FlowConfig:
    """Read a TOML config file into a fully defaulted ``FlowConfig``.

    Raises ``ParseError`` for malformed files and ``ValidationError`` (naming
    the offending key) for unknown keys or inadmissible values.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed config {path}: {exc}") from exc
    for section in data:
        if section not in _SECTIONS:
            raise ValidationError(
                f"unknown config section [{section}]; valid sections: "
                + ", ".join(sorted(_SECTIONS))
            )
        if not isinstance(data[section], dict):
            raise ValidationError(f"config key {section} must be a section")
        _reject_unknown(section, data[section], _SECTIONS[section])
    flow = data.get("flow", {})
    params = data.get("params", {})
    initial = data.get("initial", {})

    try:
        gauge = GaugeSpec(rank=1, kind=flow.get("gauge", "material"))
        timederiv = TimeDerivSpec(rank=1, kind=flow.get("timederiv", "material"))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc

    schedule = flow.get("tau_schedule")
    if schedule is not None:
        try:
            schedule = tuple((float(u), float(t)) for u, t in schedule)
        except (TypeError, ValueError) as exc:
            raise ValidationError(
                "flow.tau_schedule must be a list of [until_time, step] pairs"
            ) from exc

    cfg = FlowConfig(
        n=int(flow.get("n", 100)),
        h=float(flow.get("h", 0.01)),
        params=FOParams(
            K=float(params.get("K", FOParams.K)),
            omega=float(params.get("omega", FOParams.omega)),
            mobility=float(params.get("mobility", FOParams.mobility)),
        ),
        gauge=gauge,
        timederiv=timederiv,
        t_end=float(flow.get("t_end", 10.0)),
        tau_schedule=schedule,
        tau_init=float(flow.get("tau_init", 1.0e-4)),
        tau_max=float(flow.get("tau_max", 0.45)),
        ramp_factor=float(flow.get("ramp_factor", 1.5)),
        ramp_every=int(flow.get("ramp_every", 10)),
        tau_min=float(flow.get("tau_min", 1.0e-10)),
        snapshot_times=tuple(float(t) for t in flow.get("snapshot_times",
                                                        (0.016, 10.0))),
        initial_condition=InitialCondition(
            family=str(initial.get("family", InitialCondition.family)),
            winding=float(initial.get("winding", InitialCondition.winding)),
            width=float(initial.get("width", InitialCondition.width)),
        ),
        linear_solver_tolerance=float(flow.get("linear_solver_tolerance", 1.0e-12)),
        allow_inconsistent=bool(flow.get("allow_inconsistent", False)),
        stop_gradnorm=(None if flow.get("stop_gradnorm") is None
                       else float(flow["stop_gradnorm"])),
        scheme=str(flow.get("scheme", "spectral")),
        dealias=bool(flow.get("dealias", True)),
    )
    try:
        cfg.validate()
    except BadConfig as exc:
        raise ValidationError(str(exc)) from exc
    return cfg


def config_to_dict(cfg: FlowConfig) -> dict:
    """Canonical nested-dict echo of a config (manifest and hashing form)."""
    return {
        "flow": {
            "gauge": cfg.gauge.kind,
            "timederiv": cfg.timederiv.kind,
            "allow_inconsistent": cfg.allow_inconsistent,
            "n": cfg.n,
            "h": cfg.h,
            "t_end": cfg.t_end,
            "tau_schedule": (None if cfg.tau_schedule is None
                             else [[u, t] for u, t in cfg.tau_schedule]),
            "tau_init": cfg.tau_init,
            "tau_max": cfg.tau_max,
            "ramp_factor": cfg.ramp_factor,
            "ramp_every": cfg.ramp_every,
            "tau_min": cfg.tau_min,
            "snapshot_times": list(cfg.snapshot_times),
            "scheme": cfg.scheme,
            "dealias": cfg.dealias,
            "stop_gradnorm": cfg.stop_gradnorm,
            "linear_solver_tolerance": cfg.linear_solver_tolerance,
        },
        "params": {
            "K": cfg.params.K,
            "omega": cfg.params.omega,
            "mobility": cfg.params.mobility,
        },
        "initial": {
            "family": cfg.initial_condition.family,
            "winding": cfg.initial_condition.winding,
            "width": cfg.initial_condition.width,
        },
    }


def config_hash(cfg: FlowConfig) -> str:
    """Content hash of a config; stable across runs for identical configs."""
    blob = json.dumps(config_to_dict(cfg), sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


@dataclasses.dataclass
class RunManifest:
    """What a run was and where its outputs live."""

    config: dict
    config_hash: str
    outputs: list[str]
    started_at: str
    finished_at: str | None = None
    status: str = "running"
    schema: str = MANIFEST_SCHEMA

    def write(self, path: Path) -> None:
        payload = dataclasses.asdict(self)
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")


def _fmt(x: float) -> str:
    """Shortest decimal representation that parses back to the same float."""
    return repr(float(x))


def write_energy_csv(path: str | Path, trajectory: Trajectory) -> None:
    """Energy series, one row per accepted step interval."""
    lines = [f"# schema: {ENERGY_SCHEMA}",
             "t,tau,U_grad,U_R,U_total,dissipation_residual"]
    for row in trajectory.energy:
        lines.append(",".join(_fmt(v) for v in (
            row.t, row.tau, row.U_grad, row.U_R, row.U_total,
            row.dissipation_residual)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_energy_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Read an energy series back as named arrays; checks the schema line."""
    text = Path(path).read_text(encoding="utf-8").strip().split("\n")
    if not text or not text[0].startswith("# schema: "):
        raise SchemaMismatch(f"{path}: missing schema line")
    schema = text[0][len("# schema: "):]
    if schema != ENERGY_SCHEMA:
        raise SchemaMismatch(
            f"{path}: schema {schema!r}, this reader expects {ENERGY_SCHEMA!r}"
        )
    header = text[1].split(",")
    cols = {name: [] for name in header}
    for line in text[2:]:
        if not line:
            continue
        for name, val in zip(header, line.split(",")):
            cols[name].append(float(val))
    return {name: np.asarray(vals) for name, vals in cols.items()}


def snapshot_payload(snap: Snapshot, cfg: FlowConfig) -> dict:
    """JSON payload of one snapshot.

    Carries the Lagrange grid ``y2``, the displacement and director arrays,
    and the embedded positions ``X = (f1, y2 + f2, 0)`` of the ``y1 = 0``
    material line so plots can draw against Euler coordinates directly.
    """
    st = snap.state
    y2 = np.arange(cfg.n) * cfg.h
    X = np.stack([st.f1, y2 + st.f2, np.zeros(cfg.n)], axis=1)
    return {
        "schema": SNAPSHOT_SCHEMA,
        "requested_time": snap.requested_time,
        "time": st.t,
        "n": cfg.n,
        "h": cfg.h,
        "y2": y2.tolist(),
        "f1": st.f1.tolist(),
        "f2": st.f2.tolist(),
        "q1": st.q1.tolist(),
        "q2": st.q2.tolist(),
        "X_embedded": X.tolist(),
    }


def write_snapshot_json(path: str | Path, snap: Snapshot,
                        cfg: FlowConfig) -> None:
    payload = snapshot_payload(snap, cfg)
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_snapshot(path: str | Path) -> dict:
    """Read a snapshot payload; rejects mismatched schema versions."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema") != SNAPSHOT_SCHEMA:
        raise SchemaMismatch(
            f"{path}: schema {data.get('schema')!r}, this reader expects "
            f"{SNAPSHOT_SCHEMA!r}"
        )
    return data


def _snapshot_name(requested_time: float) -> str:
    return f"snapshot_t{requested_time:g}.json"


def run_experiment(cfg: FlowConfig, outdir: str | Path,
                   log=sys.stderr) -> int:
    """Run one relaxation and write manifest, energy CSV, and snapshots.

    Returns a process exit status: 0 on success, 1 on solver failure (with a
    diagnostic on ``log``).  The manifest is written before the first data
    row and finalised afterwards.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg.validate()
    energy_path = outdir / "energy.csv"
    snap_paths = [outdir / _snapshot_name(t) for t in cfg.snapshot_times]
    manifest = RunManifest(
        config=config_to_dict(cfg),
        config_hash=config_hash(cfg),
        outputs=[p.name for p in [energy_path, *snap_paths]],
        started_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    manifest_path = outdir / "manifest.json"
    manifest.write(manifest_path)
    try:
        trajectory = run(cfg)
    except GaugeflowError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=log)
        manifest.status = f"failed: {type(exc).__name__}: {exc}"
        manifest.finished_at = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
        manifest.write(manifest_path)
        return 1
    write_energy_csv(energy_path, trajectory)
    for snap in trajectory.snapshots:
        write_snapshot_json(outdir / _snapshot_name(snap.requested_time),
                            snap, cfg)
    manifest.status = "ok"
    manifest.finished_at = datetime.datetime.now(
        datetime.timezone.utc).isoformat()
    manifest.write(manifest_path)
    return 0
