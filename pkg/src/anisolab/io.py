"""
Run configuration, checkpoints and result files.

Configuration is YAML with a fixed schema; unknown keys are errors.  Checkpoints
hold spectral coefficients bit-exactly:

    offset  type        field
    0       4s          magic b"ANS1"
    4       u32         version (1)
    8       f64 u32     L, N
    20      f64 u32     Z, M
    32      f64 u32     dealias_fraction, order
    44      u32         component count
    48      f64         time t
    56      c128[...]   coefficients, component-major, each (M, N, N//2+1) C-order

all little-endian.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .grid import GridSpec, SpectralField, VectorField, make_grid

__all__ = [
    "ConfigError",
    "RunConfig",
    "NormRequest",
    "load_config",
    "parse_config",
    "write_checkpoint",
    "read_checkpoint",
    "atomic_write_bytes",
    "atomic_write_text",
    "norms_csv_text",
    "read_norms_csv",
    "CSV_COLUMNS",
    "format_exponent",
]

MAGIC = b"ANS1"
VERSION = 1
_HEADER = struct.Struct("<4sIdIdIdIId")
CSV_COLUMNS = ("t", "component", "p", "q", "alpha_h", "alpha_3", "value")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _exponent(v, where: str) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", ".inf"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: exponent must be a number or 'inf', got {v!r}")
    v = float(v)
    if not 1.0 <= v <= math.inf:
        raise ConfigError(f"{where}: exponent must lie in [1, inf], got {v!r}")
    return v


def format_exponent(v: float) -> str:
    return "inf" if v == math.inf else repr(float(v))


@dataclass(frozen=True)
class NormRequest:
    component: str
    p: float
    q: float
    alpha: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a run configuration file."""

    grid: dict
    dt: float
    t_max: float
    save_every: int
    profile: str
    amplitude: float
    seed: int
    norms: tuple[NormRequest, ...]
    t0: float
    t1: float
    tolerance: float
    smallness_delta: float
    mode: str = "nonlinear"
    picard_iters: int = 2
    width: float = 1.0
    xs_order: int = 2
    checkpoints: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def make_grid(self) -> GridSpec:
        return make_grid(**self.grid)


_SCHEMA = {
    "grid": {"L", "N", "Z", "M", "dealias_fraction", "order"},
    "time": {"dt", "t_max", "save_every", "picard_iters"},
    "ic": {"profile", "amplitude", "seed", "width"},
    "fit": {"t0", "t1", "tolerance"},
}
_TOP = set(_SCHEMA) | {"norms", "smallness_delta", "mode", "xs_order", "checkpoints"}
_NORM_KEYS = {"component", "p", "q", "alpha"}


def _section(raw: dict, name: str, required: set) -> dict:
    sec = raw.get(name)
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} missing or not a mapping")
    unknown = set(sec) - _SCHEMA[name]
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    missing = required - set(sec)
    if missing:
        raise ConfigError(f"missing keys in {name!r}: {sorted(missing)}")
    return sec


def _number(v, where: str, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    if kind is int:
        if float(v) != int(v):
            raise ConfigError(f"{where} must be an integer, got {v!r}")
        return int(v)
    return float(v)


def parse_config(raw) -> RunConfig:
    """Validate a parsed YAML document; raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(raw) - _TOP
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    g = _section(raw, "grid", {"L", "N", "Z", "M"})
    t = _section(raw, "time", {"dt", "t_max"})
    ic = _section(raw, "ic", {"profile", "amplitude", "seed"})
    fit = _section(raw, "fit", {"t0", "t1"})
    grid = {
        "L": _number(g["L"], "grid.L"), "N": _number(g["N"], "grid.N", int),
        "Z": _number(g["Z"], "grid.Z"), "M": _number(g["M"], "grid.M", int),
        "dealias_fraction": _number(g.get("dealias_fraction", 2.0 / 3.0), "grid.dealias_fraction"),
        "order": _number(g.get("order", 10), "grid.order", int),
    }
    try:
        make_grid(**grid)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc
    norms_raw = raw.get("norms", [])
    if not isinstance(norms_raw, list):
        raise ConfigError("norms must be a list")
    norms = []
    for i, n in enumerate(norms_raw):
        if not isinstance(n, dict):
            raise ConfigError(f"norms[{i}] must be a mapping")
        unknown = set(n) - _NORM_KEYS
        if unknown:
            raise ConfigError(f"unknown keys in norms[{i}]: {sorted(unknown)}")
        comp = n.get("component")
        if comp not in ("horizontal", "vertical"):
            raise ConfigError(f"norms[{i}].component must be horizontal or vertical, got {comp!r}")
        alpha = n.get("alpha", [0, 0])
        if (not isinstance(alpha, (list, tuple)) or len(alpha) != 2
                or any(isinstance(a, bool) or not isinstance(a, int) or a < 0 for a in alpha) or sum(alpha) > 1):
            raise ConfigError(f"norms[{i}].alpha must be [alpha_h, alpha_3] with |alpha| <= 1, got {alpha!r}")
        norms.append(NormRequest(comp, _exponent(n.get("p"), f"norms[{i}].p"),
                                 _exponent(n.get("q"), f"norms[{i}].q"), (int(alpha[0]), int(alpha[1]))))
    mode = raw.get("mode", "nonlinear")
    if mode not in ("linear", "nonlinear"):
        raise ConfigError(f"mode must be linear or nonlinear, got {mode!r}")
    profile = ic["profile"]
    if profile not in ("gaussian_bump", "shear_roll"):
        raise ConfigError(f"ic.profile must be gaussian_bump or shear_roll, got {profile!r}")
    cfg = RunConfig(
        grid=grid,
        dt=_number(t["dt"], "time.dt"),
        t_max=_number(t["t_max"], "time.t_max"),
        save_every=_number(t.get("save_every", 1), "time.save_every", int),
        picard_iters=_number(t.get("picard_iters", 2), "time.picard_iters", int),
        profile=profile,
        amplitude=_number(ic["amplitude"], "ic.amplitude"),
        seed=_number(ic["seed"], "ic.seed", int),
        width=_number(ic.get("width", 1.0), "ic.width"),
        norms=tuple(norms),
        t0=_number(fit["t0"], "fit.t0"),
        t1=_number(fit["t1"], "fit.t1"),
        tolerance=_number(fit.get("tolerance", 0.15), "fit.tolerance"),
        smallness_delta=_number(raw.get("smallness_delta", 1e-2), "smallness_delta"),
        mode=mode,
        xs_order=_number(raw.get("xs_order", 2), "xs_order", int),
        checkpoints=bool(raw.get("checkpoints", True)),
    )
    if not cfg.dt > 0 or not cfg.t_max >= cfg.dt:
        raise ConfigError("time: need dt > 0 and t_max >= dt")
    if cfg.save_every < 1 or cfg.picard_iters < 1:
        raise ConfigError("time: save_every and picard_iters must be at least 1")
    if cfg.amplitude < 0 or cfg.width <= 0:
        raise ConfigError("ic: amplitude must be nonnegative and width positive")
    if not 0 < cfg.t0 < cfg.t1:
        raise ConfigError("fit: need 0 < t0 < t1")
    if cfg.tolerance <= 0 or cfg.smallness_delta <= 0:
        raise ConfigError("fit.tolerance and smallness_delta must be positive")
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text)
    except (OSError, UnicodeDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(raw)


# -- atomic files ------------------------------------------------------------------

def atomic_write_bytes(path, data: bytes) -> None:
    """Write ``data`` to a temporary file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- checkpoints -------------------------------------------------------------------

def checkpoint_bytes(u: VectorField, t: float) -> bytes:
    g = u.grid
    comps = list(u)
    header = _HEADER.pack(MAGIC, VERSION, g.L, g.N, g.Z, g.M, g.dealias_fraction, g.order, len(comps), float(t))
    body = b"".join(np.ascontiguousarray(c.coeffs, dtype="<c16").tobytes() for c in comps)
    return header + body


def write_checkpoint(path, u: VectorField, t: float) -> None:
    atomic_write_bytes(path, checkpoint_bytes(u, t))


def read_checkpoint(path) -> tuple[VectorField, float]:
    """
    Read a checkpoint written by :func:`write_checkpoint`.

    Raises
    ------
    ValueError
        Bad magic, unknown version or truncated payload.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("checkpoint shorter than its header")
    magic, version, L, N, Z, M, frac, order, ncomp, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    grid = GridSpec(L, N, Z, M, frac, order)
    shape = grid.spectral_shape
    count = int(np.prod(shape))
    expected = _HEADER.size + ncomp * count * 16
    if len(data) != expected:
        raise ValueError(f"checkpoint payload has {len(data)} bytes, expected {expected}")
    arr = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape((ncomp,) + shape)
    if ncomp != 3:
        raise ValueError(f"expected 3 velocity components, found {ncomp}")
    comps = tuple(SpectralField(grid, arr[i].astype(complex)) for i in range(ncomp))
    return VectorField(comps), float(t)


# -- norms.csv ---------------------------------------------------------------------

def norms_csv_text(series) -> str:
    """Rows ordered by time, then by the order of ``series``; floats in shortest round-trip form."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    rows = []
    for idx, s in enumerate(series):
        for n, (t, v) in enumerate(zip(s.times, s.values)):
            rows.append((t, idx, n, s))
    rows.sort(key=lambda r: (r[0], r[1]))
    for t, _idx, n, s in rows:
        w.writerow((repr(float(t)), s.component, format_exponent(s.spec.p), format_exponent(s.spec.q),
                    s.spec.alpha[0], s.spec.alpha[1], repr(float(s.values[n]))))
    return buf.getvalue()


def read_norms_csv(path) -> dict:
    """
    Parse ``norms.csv`` into ``{(component, p, q, alpha_h, alpha_3): (times, values)}``.

    Raises
    ------
    ValueError
        Missing or unexpected columns, malformed numbers, or no data rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"expected columns {CSV_COLUMNS}, found {header}")
        groups: dict = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields")
            try:
                t = float(row[0])
                comp = row[1]
                p = math.inf if row[2] == "inf" else float(row[2])
                q = math.inf if row[3] == "inf" else float(row[3])
                ah, a3 = int(row[4]), int(row[5])
                v = float(row[6])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from exc
            if comp not in ("horizontal", "vertical"):
                raise ValueError(f"line {lineno}: unknown component {comp!r}")
            key = (comp, p, q, ah, a3)
            ts, vs = groups.setdefault(key, ([], []))
            ts.append(t)
            vs.append(v)
    if not groups:
        raise ValueError("no data rows")
    return groups


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
