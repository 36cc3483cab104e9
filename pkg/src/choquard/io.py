"""Run directories, flat-key config files, and deterministic serialization.

A run directory holds config.cfg (normalized echo of the input), manifest.json,
diagnostics.csv with the fixed column schema, optional morawetz.csv for the
localized-norm columns, snapshots/ with .npy fields plus a JSON index, and
verdict.json.  Every file is written atomically (tmp file + os.replace) and
floats are serialized with repr, so identical inputs give byte-identical
output except for the wall_time entry of the manifest.
"""

from __future__ import annotations

import hashlib
import io as _stdio
import json
import math
import os
import tempfile
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .params import ModelParams, derived_exponents
from .diagnostics import CSV_COLUMNS, DiagnosticsRecord

CONFIG_NAME = "config.cfg"
MANIFEST_NAME = "manifest.json"
DIAGNOSTICS_NAME = "diagnostics.csv"
MORAWETZ_NAME = "morawetz.csv"
VERDICT_NAME = "verdict.json"
SNAP_DIR = "snapshots"

INIT_KINDS = ("gaussian", "ring", "groundstate_scaled")


def _fmt(x) -> str:
    """Round-trip float formatting; ints and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _parse_scalar(s: str):
    s = s.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_flat_config(path) -> dict:
    """key=value lines, # comments, blank lines ignored."""
    out: dict = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = val.strip()
    return out


@dataclass
class RunConfig:
    """Flat dotted-key run configuration with benchmark defaults."""

    model_N: int = 3
    model_alpha: float = 2.0
    model_b: float = -0.5
    model_p: float = 2.5
    grid_M: int = 64
    grid_L: float = 16.0
    init_kind: str = "groundstate_scaled"
    init_amplitude: float = 1.0
    init_width: float = 1.0
    init_c: float = 0.5
    evolve_dt: float = 1e-3
    evolve_t_end: float = 10.0
    evolve_output_stride: int = 10
    evolve_snapshot_stride: int = 0
    evolve_fft_precision: str = "double"
    evolve_adapt_enabled: bool = False
    evolve_adapt_grad_growth_trigger: float = 1.25
    evolve_adapt_dt_min: float = 2e-4
    diagnostics_R_list: list = dc_field(default_factory=list)
    diagnostics_level: str = "standard"
    diagnostics_thresholds: dict = dc_field(default_factory=dict)
    sweep_c_list: list = dc_field(
        default_factory=lambda: [0.4, 0.6, 0.8, 1.0, 1.15, 1.3])
    sweep_p_list: list = dc_field(default_factory=list)
    sweep_b_list: list = dc_field(default_factory=list)
    output_dir: str = "run"
    output_formats: str = "csv,json"
    seed: int = 0
    linear_only: bool = False

    _KEYMAP = {
        "model.N": ("model_N", int),
        "model.alpha": ("model_alpha", float),
        "model.b": ("model_b", float),
        "model.p": ("model_p", float),
        "grid.M": ("grid_M", int),
        "grid.L": ("grid_L", float),
        "init.kind": ("init_kind", str),
        "init.amplitude": ("init_amplitude", float),
        "init.width": ("init_width", float),
        "init.c": ("init_c", float),
        "evolve.dt": ("evolve_dt", float),
        "evolve.t_end": ("evolve_t_end", float),
        "evolve.output_stride": ("evolve_output_stride", int),
        "evolve.snapshot_stride": ("evolve_snapshot_stride", int),
        "evolve.fft_precision": ("evolve_fft_precision", str),
        "evolve.adapt.enabled": ("evolve_adapt_enabled", bool),
        "evolve.adapt.grad_growth_trigger":
            ("evolve_adapt_grad_growth_trigger", float),
        "evolve.adapt.dt_min": ("evolve_adapt_dt_min", float),
        "diagnostics.level": ("diagnostics_level", str),
        "output.dir": ("output_dir", str),
        "output.formats": ("output_formats", str),
        "seed": ("seed", int),
        "evolve.linear_only": ("linear_only", bool),
    }

    @classmethod
    def from_flat(cls, flat: dict) -> "RunConfig":
        cfg = cls()
        for key, raw in flat.items():
            if key == "diagnostics.R_list":
                vals = [v for v in str(raw).split(",") if v.strip()]
                cfg.diagnostics_R_list = [float(v) for v in vals]
                continue
            if key in ("sweep.c_list", "sweep.p_list", "sweep.b_list"):
                vals = [float(v) for v in str(raw).split(",") if v.strip()]
                setattr(cfg, key.replace("sweep.", "sweep_"), vals)
                continue
            if key.startswith("diagnostics.thresholds."):
                name = key[len("diagnostics.thresholds."):]
                cfg.diagnostics_thresholds[name] = _parse_scalar(str(raw))
                continue
            if key not in cls._KEYMAP:
                raise KeyError(f"unknown config key {key!r}")
            attr, typ = cls._KEYMAP[key]
            val = _parse_scalar(str(raw))
            if typ is bool:
                if not isinstance(val, bool):
                    raise ValueError(f"{key} expects true/false, got {raw!r}")
            elif typ is int:
                if not isinstance(val, int) or isinstance(val, bool):
                    raise ValueError(f"{key} expects an integer, got {raw!r}")
            elif typ is float:
                if isinstance(val, bool) or not isinstance(val, (int, float)):
                    raise ValueError(f"{key} expects a number, got {raw!r}")
                val = float(val)
            else:
                val = str(val)
            setattr(cfg, attr, val)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_flat(read_flat_config(path))

    def validate(self) -> None:
        if self.init_kind not in INIT_KINDS:
            raise ValueError(f"init.kind must be one of {INIT_KINDS}, "
                             f"got {self.init_kind!r}")
        if self.init_width <= 0:
            raise ValueError("init.width must be positive")
        if self.diagnostics_level not in ("core", "standard", "full"):
            raise ValueError("diagnostics.level must be core, standard or full")
        for R in self.diagnostics_R_list:
            if not 0 < R < self.grid_L / 2:
                raise ValueError(f"diagnostics.R_list entry {R} outside "
                                 f"(0, L/2)")

    def to_flat(self) -> dict:
        """Normalized flat mapping with every key present, sorted."""
        out = {}
        for key, (attr, _) in self._KEYMAP.items():
            out[key] = getattr(self, attr)
        out["diagnostics.R_list"] = ",".join(
            _fmt(R) for R in self.diagnostics_R_list)
        out["sweep.c_list"] = ",".join(_fmt(c) for c in self.sweep_c_list)
        out["sweep.p_list"] = ",".join(_fmt(v) for v in self.sweep_p_list)
        out["sweep.b_list"] = ",".join(_fmt(v) for v in self.sweep_b_list)
        for name in sorted(self.diagnostics_thresholds):
            out[f"diagnostics.thresholds.{name}"] = \
                self.diagnostics_thresholds[name]
        return dict(sorted(out.items()))

    def config_text(self) -> str:
        lines = [f"{k} = {_fmt(v)}" for k, v in self.to_flat().items()]
        return "\n".join(lines) + "\n"

    def model_params(self) -> ModelParams:
        # ModelParams promotes exactly-representable floats to fractions,
        # so the derived exponents come out rational for benchmark inputs
        return ModelParams(N=self.model_N, alpha=self.model_alpha,
                           b=self.model_b, p=self.model_p)


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode())


def write_csv(path, columns, rows) -> None:
    """Deterministic CSV: fixed column order, repr floats, nan spelled nan."""
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path) -> tuple:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        rows.append([_parse_scalar(v) for v in ln.split(",")])
    return header, rows


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def records_to_rows(records) -> list:
    """Project raw record dicts onto the fixed diagnostics schema."""
    rows = []
    for rec in records:
        dr = DiagnosticsRecord.from_mapping(rec)
        rows.append(dr.to_row())
    return rows


def write_diagnostics(run_dir, records) -> None:
    write_csv(Path(run_dir) / DIAGNOSTICS_NAME, CSV_COLUMNS,
              records_to_rows(records))


def write_morawetz(run_dir, times, records, radii) -> None:
    """Side table for the localized L^r columns, one per configured R."""
    cols = ["t"] + [f"loc_lr_R{R:g}" for R in radii]
    rows = []
    for t, rec in zip(times, records):
        rows.append([t] + [rec.get(f"loc_lr_R{R:g}", math.nan)
                           for R in radii])
    write_csv(Path(run_dir) / MORAWETZ_NAME, cols, rows)


def save_snapshots(run_dir, snapshots) -> list:
    """Write snapshots/snap_XXX.npy plus index.json; returns file names."""
    snap_dir = Path(run_dir) / SNAP_DIR
    snap_dir.mkdir(parents=True, exist_ok=True)
    names = []
    index = []
    for i, (t, u) in enumerate(snapshots):
        name = f"snap_{i:03d}.npy"
        vals = u.values if hasattr(u, "values") else u
        buf = _stdio.BytesIO()
        np.save(buf, np.ascontiguousarray(vals))
        atomic_write_bytes(snap_dir / name, buf.getvalue())
        names.append(f"{SNAP_DIR}/{name}")
        index.append({"t": t, "file": name, "shape": list(vals.shape),
                      "dtype": str(vals.dtype)})
    atomic_write_text(snap_dir / "index.json",
                      json.dumps({"snapshots": index}, indent=1,
                                 sort_keys=True) + "\n")
    names.append(f"{SNAP_DIR}/index.json")
    return names


def load_snapshots(run_dir, grid=None):
    from .grid import Field
    snap_dir = Path(run_dir) / SNAP_DIR
    index = json.loads((snap_dir / "index.json").read_text())
    out = []
    for entry in index["snapshots"]:
        vals = np.load(snap_dir / entry["file"])
        out.append((entry["t"], Field(grid, vals) if grid is not None else vals))
    return out


def exponents_block(params: ModelParams) -> dict:
    ex = derived_exponents(params)
    names = ("s_c", "p_star", "p_sup", "A", "B")
    return {"floats": ex.as_floats(),
            "exact": {k: str(getattr(ex, k)) for k in names}}


def write_manifest(run_dir, config: RunConfig, *, phi_hash=None, t_wrap=None,
                   wall_time=None, verdict=None, status=None,
                   extra=None) -> dict:
    """manifest.json: config echo, exponents, file hashes, content hash.

    The content hash covers every run product except the manifest itself;
    wall_time is the only entry allowed to differ between identical runs.
    """
    run_dir = Path(run_dir)
    files = {}
    for path in sorted(run_dir.rglob("*")):
        if not path.is_file() or path.name == MANIFEST_NAME:
            continue
        files[str(path.relative_to(run_dir))] = sha256_file(path)
    content = hashlib.sha256()
    for name in sorted(files):
        content.update(name.encode())
        content.update(files[name].encode())
    manifest = {
        "config": {k: _fmt(v) for k, v in config.to_flat().items()},
        "derived_exponents": exponents_block(config.model_params()),
        "phi_hash": phi_hash,
        "t_wrap": t_wrap,
        "status": status,
        "verdict": verdict,
        "files": files,
        "content_hash": content.hexdigest(),
        "wall_time": wall_time,
    }
    if extra:
        manifest.update(extra)
    atomic_write_text(run_dir / MANIFEST_NAME,
                      json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def read_manifest(run_dir) -> dict:
    return json.loads((Path(run_dir) / MANIFEST_NAME).read_text())
