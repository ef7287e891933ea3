"""Config parsing and artifact files (CSV fields, PGM images, JSON reports).

Config files are YAML mappings::

    grid: {dimension: 1, extent: 25.0, points: 200, periodic: false}
    kernel: {family: K1, params: {A: 1.0, B: 0.25, p: 1.0, q: 4.0}}
    a: 1.0
    response: {kind: saturation, b: 0.8}
    dt: 0.1
    max_steps: 20000
    stationarity_tol: 1.0e-8
    method: auto
    initial_condition: {kind: step}

``kernel.params`` may be omitted (family defaults). Custom kernels take
``bands: [[inner, outer, amplitude], ...]`` and optionally ``s``. Initial
condition kinds: zero, random (seed, amplitude), step, square (half_width),
mode (index, amplitude), periodic_square (period, center), file (path).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np
import yaml

from .core import (
    Field,
    FromFile,
    Grid,
    ModeSeed,
    PeriodicSquare,
    Random,
    SimConfig,
    SquarePlateau,
    StepSign,
    Zero,
    make_grid,
    sample_kernel,
)
from .dynamics import RESPONSE_KINDS, Response, RunReport


class ConfigError(ValueError):
    """Schema or value error in a config file, with key path and line."""


# key -> (required, children schema or None for scalars)
_SCHEMA: dict[str, Any] = {
    "grid": {"dimension": int, "extent": float, "points": int, "periodic": bool},
    "kernel": {"family": str, "params": dict, "bands": list, "s": float},
    "a": float,
    "response": {"kind": str, "b": float},
    "dt": float,
    "max_steps": int,
    "stationarity_tol": float,
    "method": str,
    "initial_condition": {
        "kind": str, "seed": int, "amplitude": float, "half_width": float,
        "index": int, "period": float, "center": float, "path": str,
    },
}
_REQUIRED = {
    "": ("grid", "kernel", "response"),
    "grid": ("dimension", "extent", "points"),
    "kernel": ("family",),
    "response": ("kind", "b"),
}
_FLOAT_LITERAL = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")
_IC_KINDS = ("zero", "random", "step", "square", "mode", "periodic_square", "file")


@dataclass(frozen=True)
class _Source:
    path: str
    lines: dict[tuple[str, ...], int]

    def where(self, keys: tuple[str, ...]) -> str:
        line = None
        probe = keys
        while probe and line is None:
            line = self.lines.get(probe)
            probe = probe[:-1]
        loc = f"{self.path}:{line}" if line else self.path
        return f"{loc}: key '{'.'.join(keys)}'" if keys else loc


def _key_lines(node: yaml.Node, prefix: tuple[str, ...], out: dict) -> None:
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = (*prefix, str(key_node.value))
            out[key] = key_node.start_mark.line + 1
            _key_lines(value_node, key, out)


def _coerce(value: Any, kind: type, src: _Source, keys: tuple[str, ...]) -> Any:
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{src.where(keys)}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{src.where(keys)}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, str) and _FLOAT_LITERAL.fullmatch(value.strip()):
            # YAML 1.1 reads 1.0e6 (unsigned exponent) as a string.
            return float(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{src.where(keys)}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{src.where(keys)}: expected {kind.__name__}, got {value!r}")
    return value


def _validate(data: Any, schema: dict, src: _Source, prefix: tuple[str, ...] = ()) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{src.where(prefix)}: expected a mapping")
    out = {}
    for key, value in data.items():
        keys = (*prefix, str(key))
        if key not in schema:
            raise ConfigError(f"{src.where(keys)}: unknown key")
        rule = schema[key]
        out[key] = _validate(value, rule, src, keys) if isinstance(rule, dict) else _coerce(value, rule, src, keys)
    for key in _REQUIRED.get(".".join(prefix), ()):
        if key not in out:
            raise ConfigError(f"{src.where(prefix)}: missing required key '{key}'")
    return out


def _initial_condition(spec: dict, src: _Source):
    keys = ("initial_condition",)
    kind = spec.get("kind", "zero")
    allowed = {
        "zero": (), "step": (), "random": ("seed", "amplitude"), "square": ("half_width",),
        "mode": ("index", "amplitude"), "periodic_square": ("period", "center"), "file": ("path",),
    }
    if kind not in allowed:
        raise ConfigError(f"{src.where((*keys, 'kind'))}: unknown kind {kind!r}; expected one of {_IC_KINDS}")
    extra = set(spec) - {"kind", *allowed[kind]}
    if extra:
        raise ConfigError(f"{src.where((*keys, sorted(extra)[0]))}: not valid for kind {kind!r}")
    args = {k: spec[k] for k in allowed[kind] if k in spec}
    if kind == "zero":
        return Zero()
    if kind == "step":
        return StepSign()
    if kind == "random":
        return Random(**args)
    if kind == "square":
        return SquarePlateau(**args)
    if kind == "mode":
        return ModeSeed(**args)
    if kind == "periodic_square":
        return PeriodicSquare(**args)
    if "path" not in args:
        raise ConfigError(f"{src.where(keys)}: kind 'file' needs a path")
    path = Path(args["path"])
    if not path.is_absolute():
        path = Path(src.path).parent / path
    return FromFile(str(path))


def config_from_mapping(data: Any, source: str = "<config>", lines: dict | None = None) -> SimConfig:
    src = _Source(source, lines or {})
    cfg = _validate(data, _SCHEMA, src)
    g = cfg["grid"]
    try:
        grid = make_grid(g["dimension"], g["extent"], g["points"], g.get("periodic", False))
    except ValueError as exc:
        raise ConfigError(f"{src.where(('grid',))}: {exc}") from exc

    k = cfg["kernel"]
    try:
        if k["family"] == "custom":
            if "bands" not in k:
                raise ValueError("custom kernels need 'bands'")
            params = {"bands": k["bands"], "s": k.get("s", 0.0)}
        else:
            if "bands" in k:
                raise ValueError("'bands' is only valid for the custom family")
            params = k.get("params")
        kernel = sample_kernel(k["family"], params, grid.spacing, grid.dimension)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{src.where(('kernel',))}: {exc}") from exc

    r = cfg["response"]
    if r["kind"] not in RESPONSE_KINDS:
        raise ConfigError(f"{src.where(('response', 'kind'))}: unknown kind {r['kind']!r}")
    response = Response(r["kind"], r["b"])
    ic = _initial_condition(cfg.get("initial_condition", {}), src)

    scalars = {key: cfg[key] for key in ("a", "dt", "max_steps", "stationarity_tol", "method") if key in cfg}
    try:
        return SimConfig(grid=grid, kernel=kernel, response=response, initial_condition=ic, **scalars)
    except ValueError as exc:
        bad = next((key for key in scalars if key in str(exc)), None)
        if bad is None and "dt" in str(exc):
            bad = "dt"
        raise ConfigError(f"{src.where((bad,) if bad else ())}: {exc}") from exc


def parse_config(path: str | Path) -> SimConfig:
    """Read a YAML config; unknown keys and invalid values raise ConfigError."""
    path = Path(path)
    text = path.read_text()
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(f"{loc}: YAML syntax error: {getattr(exc, 'problem', exc)}") from exc
    lines: dict = {}
    if root is not None:
        _key_lines(root, (), lines)
    return config_from_mapping(data if data is not None else {}, str(path), lines)


def config_to_mapping(config: SimConfig) -> dict:
    """Inverse of ``config_from_mapping`` for named-family and band kernels."""
    g, k = config.grid, config.kernel
    kernel: dict = {"family": k.family}
    if k.family == "custom":
        kernel["bands"] = [[b.inner, b.outer, b.amplitude] for b in k.bands]
        kernel["s"] = k.s
    elif k.params is not None:
        kernel["params"] = dict(k.params)
    ic = config.initial_condition
    ic_map: dict = {
        Zero: lambda: {"kind": "zero"},
        StepSign: lambda: {"kind": "step"},
        Random: lambda: {"kind": "random", "seed": ic.seed, "amplitude": ic.amplitude},
        SquarePlateau: lambda: {"kind": "square", "half_width": ic.half_width},
        ModeSeed: lambda: {"kind": "mode", "index": ic.index, "amplitude": ic.amplitude},
        PeriodicSquare: lambda: {"kind": "periodic_square", "period": ic.period, "center": ic.center},
        FromFile: lambda: {"kind": "file", "path": ic.path},
    }
    return {
        "grid": {"dimension": g.dimension, "extent": g.extent, "points": g.points_per_axis, "periodic": g.periodic},
        "kernel": kernel,
        "a": config.a,
        "response": {"kind": config.response.kind, "b": config.response.b},
        "dt": config.dt,
        "max_steps": config.max_steps,
        "stationarity_tol": config.stationarity_tol,
        "method": config.method,
        "initial_condition": ic_map[type(ic)](),
    }


# --- fields ---------------------------------------------------------------

_FMT = "%.17g"


def write_field_csv(field: Field, path: str | Path) -> Path:
    """Columns x[,y],u with 17 significant digits (bit-exact round trip)."""
    path = Path(path)
    grid = field.grid
    coords = [c.ravel() for c in grid.mesh()]
    header = "x,u" if grid.dimension == 1 else "x,y,u"
    table = np.column_stack([*coords, field.flat])
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, fmt=_FMT, delimiter=",", header=header, comments="")
    return path


def read_field_csv(path: str | Path, grid: Grid) -> Field:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        expected = "x,u" if grid.dimension == 1 else "x,y,u"
        if header != expected:
            raise ValueError(f"{path}: header {header!r}, expected {expected!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape != (grid.size, grid.dimension + 1):
        raise ValueError(f"{path}: {table.shape[0]} rows, grid needs {grid.size}")
    for col, coord in enumerate(grid.mesh()):
        if np.max(np.abs(table[:, col] - coord.ravel())) > 1e-9 * grid.spacing:
            raise ValueError(f"{path}: coordinates do not match the grid")
    return Field(grid, table[:, -1])


def field_to_pixels(field: Field) -> np.ndarray:
    """Map [-1, 1] linearly to 0..255 (floor), clamping out-of-range values."""
    u = np.clip(field.values, -1.0, 1.0)
    pix = np.floor((u + 1.0) / 2.0 * 255.0).astype(np.uint8)
    return pix.reshape(1, -1) if pix.ndim == 1 else pix


def write_image(field: Field, path: str | Path) -> Path:
    """Binary PGM (P5); rows follow the first grid axis, 1D fields are one row."""
    path = Path(path)
    pix = field_to_pixels(field)
    h, w = pix.shape
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())
    return path


def read_image(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


# --- reports and tables ---------------------------------------------------


def _jsonable(value: Any) -> Any:
    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return _jsonable(value.item())
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def report_summary(report: RunReport) -> dict:
    final = report.final
    out = {
        "steps_taken": report.steps_taken,
        "time": report.time,
        "dt": report.dt,
        "stationary": report.stationary,
        "residual_inf": report.residual_inf,
        "update_norm": report.update_norm,
        "warnings": list(report.warnings),
        "final": {
            "min": float(final.values.min()),
            "max": float(final.values.max()),
            "mean": float(final.values.mean()),
            "norm2": final.norm2(),
            "norm_inf": final.norm_inf(),
        },
    }
    if report.mode_times is not None:
        out["mode_times"] = report.mode_times
        out["mode_coefficients"] = report.mode_coefficients
        out["norm_history"] = report.norm_history
    return out


def write_report(report: RunReport | dict, path: str | Path, extra: dict | None = None) -> Path:
    """JSON report with every RunReport field (the final field as summary statistics)."""
    path = Path(path)
    body = report_summary(report) if isinstance(report, RunReport) else dict(report)
    if extra:
        body.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")
    return path


def write_table_csv(path: str | Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Path:
    """Plain CSV; floats at 17 significant digits, other values via str()."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def cell(v: Any) -> str:
        if isinstance(v, (float, np.floating)):
            return _FMT % v
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_spectrum_csv(spectrum, path: str | Path) -> Path:
    return write_table_csv(path, ("index", "eigenvalue"), enumerate(map(float, spectrum.eigenvalues)))


def write_branch_csv(rows, path: str | Path) -> Path:
    return write_table_csv(
        path, ("b", "amplitude", "residual", "accepted"),
        ((r.b, r.amplitude, r.residual, int(r.accepted)) for r in rows),
    )


def write_lemma_csv(report, path: str | Path) -> Path:
    return write_table_csv(
        path, ("lemma", "hypothesis", "value", "threshold", "satisfied"),
        ((report.lemma, h.name.replace(",", ";"), h.value, h.threshold, int(h.satisfied)) for h in report.hypotheses),
    )
