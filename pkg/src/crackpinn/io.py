"""Run configuration, checkpoints and tabular outputs.

Configuration files are YAML mappings.  Every section is optional; a file
that names a ``benchmark`` gets that case's full setup, and any other
section then overrides parts of it.  Recognised keys::

    benchmark: center-tension | center-shear | edge-tension | slant
    case:      {a, b, h, angle, load}                  # benchmark parameters
    material:  {youngs_modulus, poisson_ratio, assumption}
    geometry:                                          # custom problems only
      lower: [x1, x2]
      upper: [x1, x2]
      crack: {point: [x1, x2], direction: [d1, d2], range: [s0, s1]}
      crack_length: a
      face_length: length of face behind tip 0 (default crack_length)
      boundary: {bottom|right|top|left: [{u1: v} | {u2: v} | {traction: [t1, t2]}]}
    network:   {hidden_layers, neurons, activation}
    sampling:  {grid: [m, n], boundary_density, exclusion_factor}
    training:  {iterations, adam_fraction, learning_rate, lbfgs_history,
                log_every, enriched, weights: {pde1: 1.0, ...}}
    sif:       {window: [lo, hi], samples, tip}
    seeds:     [0, 1, 2]
    output:    directory

A ``null`` traction component leaves that component unconstrained.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .autodiff import VAL
from .benchmarks import BENCHMARK_IDS, BenchmarkCase, UnknownBenchmarkError, benchmark_case
from .elasticity import Material, MaterialError, navier_residual_jets, stress_from_jets
from .geometry import CrackedGeometry, GeometryError, SubdomainSpec, cracked_rectangle
from .kinematics import AtTipError, CrackTip, EnrichedModel
from .network import ActivationKind, Network
from .sif import DEFAULT_SAMPLES, DEFAULT_WINDOW
from .training import TERMS, NetArch, ProblemDefinition, TrainingConfig

CHECKPOINT_FORMAT = "crackpinn-checkpoint"
CHECKPOINT_VERSION = 1
FIELD_HEADER = ("x1", "x2", "u1", "u2", "s11", "s22", "s12", "r1", "r2")


class ConfigError(ValueError):
    """Invalid or unreadable configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


class CorruptCheckpointError(ValueError):
    pass


# ---------------------------------------------------------------- config

_SCHEMA = {
    "benchmark": None,
    "case": {"a", "b", "h", "angle", "load"},
    "material": {"youngs_modulus", "poisson_ratio", "assumption"},
    "geometry": {"lower", "upper", "crack", "crack_length", "face_length", "boundary"},
    "network": {"hidden_layers", "neurons", "activation"},
    "sampling": {"grid", "boundary_density", "exclusion_factor"},
    "training": {"iterations", "adam_fraction", "learning_rate", "lbfgs_history", "log_every", "enriched", "weights"},
    "sif": {"window", "samples", "tip"},
    "seeds": None,
    "output": None,
}


@dataclass
class RunConfig:
    problem: ProblemDefinition
    arch: NetArch
    training: TrainingConfig
    enriched: bool = True
    window: tuple = DEFAULT_WINDOW
    n_samples: int = DEFAULT_SAMPLES
    tip: int = 0
    face_length: float | None = None
    seeds: tuple = (0,)
    output: str = "out"
    benchmark: BenchmarkCase | None = None
    source: dict = field(default_factory=dict)

    @property
    def crack_length(self):
        return self.problem.crack_length


def _section(raw, name):
    sec = raw.get(name)
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping", name)
    unknown = set(sec) - _SCHEMA[name]
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{name}.{key}'", f"{name}.{key}")
    return sec


def _number(sec, key, name, kind=float, positive=False):
    try:
        v = kind(sec[key])
    except (TypeError, ValueError):
        raise ConfigError(f"'{name}.{key}' must be a number, got {sec[key]!r}", f"{name}.{key}") from None
    if positive and not v > 0:
        raise ConfigError(f"'{name}.{key}' must be positive", f"{name}.{key}")
    return v


def _pair(value, key, kind=float):
    try:
        vals = [kind(v) for v in value]
    except (TypeError, ValueError):
        vals = []
    if len(vals) != 2:
        raise ConfigError(f"'{key}' must be a list of two numbers", key)
    return tuple(vals)


def _boundary_conditions(spec):
    if not isinstance(spec, dict):
        raise ConfigError("'geometry.boundary' must be a mapping of edge names", "geometry.boundary")
    out = {}
    for edge, items in spec.items():
        key = f"geometry.boundary.{edge}"
        if edge not in ("bottom", "right", "top", "left"):
            raise ConfigError(f"unknown key '{key}'", key)
        conds = []
        for item in items if isinstance(items, list) else [items]:
            if not isinstance(item, dict) or len(item) != 1:
                raise ConfigError(f"'{key}' entries must be single-key mappings", key)
            (kind, value), = item.items()
            if kind in ("u1", "u2"):
                conds.append((kind, float(value)))
            elif kind == "traction":
                if not isinstance(value, list) or len(value) != 2:
                    raise ConfigError(f"'{key}.traction' must be [t1, t2]", key)
                conds.append((kind, tuple(None if v is None else float(v) for v in value)))
            else:
                raise ConfigError(f"unknown condition '{kind}' in '{key}'", key)
        out[edge] = conds
    return out


def _custom_geometry(sec):
    for k in ("lower", "upper", "crack", "crack_length"):
        if k not in sec:
            raise ConfigError(f"'geometry.{k}' is required without a benchmark id", f"geometry.{k}")
    crack = sec["crack"]
    if not isinstance(crack, dict) or set(crack) - {"point", "direction", "range"}:
        raise ConfigError("'geometry.crack' needs point, direction and range", "geometry.crack")
    conds = _boundary_conditions(sec.get("boundary", {}))
    try:
        sd, segs, tips = cracked_rectangle(
            _pair(sec["lower"], "geometry.lower"),
            _pair(sec["upper"], "geometry.upper"),
            _pair(crack.get("point"), "geometry.crack.point"),
            _pair(crack.get("direction"), "geometry.crack.direction"),
            _pair(crack.get("range"), "geometry.crack.range"),
            conds,
        )
    except GeometryError as e:
        raise ConfigError(str(e), "geometry") from None
    if not tips:
        raise ConfigError("the crack has no tip inside the domain", "geometry.crack")
    a = _number(sec, "crack_length", "geometry", positive=True)
    extra = {}
    if "face_length" in sec:
        extra["face_length"] = _number(sec, "face_length", "geometry", positive=True)
    return CrackedGeometry(sd, segs, tips, a, extra)


def parse_config_text(text, base=None):
    """Parse YAML text into a validated :class:`RunConfig`."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        where = f" at line {line}" if line else ""
        raise ConfigError(f"parse error{where}: {getattr(e, 'problem', e)}", line=line) from None
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(raw) - set(_SCHEMA)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{key}'", key)

    case = None
    face_length = None
    bench = raw.get("benchmark")
    case_sec = _section(raw, "case")
    geo_sec = _section(raw, "geometry")
    if bench is not None:
        if geo_sec:
            raise ConfigError("'geometry' cannot be combined with 'benchmark'", "geometry")
        try:
            case = benchmark_case(str(bench))
        except UnknownBenchmarkError as e:
            raise ConfigError(str(e), "benchmark") from None
    elif case_sec:
        raise ConfigError("'case' requires 'benchmark'", "case")

    mat_sec = _section(raw, "material")
    base_mat = case.material if case else Material()
    try:
        material = Material(
            float(mat_sec.get("youngs_modulus", base_mat.youngs_modulus)),
            float(mat_sec.get("poisson_ratio", base_mat.poisson_ratio)),
            mat_sec.get("assumption", base_mat.assumption.value),
        )
    except MaterialError as e:
        key = "material.poisson_ratio" if "poisson" in str(e) else "material"
        raise ConfigError(f"{e} (key '{key}')", key) from None
    except ValueError as e:
        raise ConfigError(f"invalid material: {e}", "material.assumption") from None

    net_sec = _section(raw, "network")
    base_arch = case.arch if case else NetArch()
    try:
        arch = NetArch(
            int(net_sec.get("hidden_layers", base_arch.hidden_layers)),
            int(net_sec.get("neurons", base_arch.neurons)),
            ActivationKind(net_sec.get("activation", base_arch.activation.value)),
        )
    except ValueError as e:
        raise ConfigError(f"invalid network: {e}", "network") from None
    if arch.hidden_layers < 1 or arch.neurons < 1:
        raise ConfigError("network needs at least one hidden layer and one neuron", "network")

    samp = _section(raw, "sampling")
    grid = _pair(samp["grid"], "sampling.grid", int) if "grid" in samp else (case.grid if case else (30, 180))
    if min(grid) < 2:
        raise ConfigError("'sampling.grid' needs at least 2 points per direction", "sampling.grid")

    tr = _section(raw, "training")
    iterations = int(tr.get("iterations", case.iterations if case else 2500))
    if iterations < 0:
        raise ConfigError("'training.iterations' must be >= 0", "training.iterations")

    if case:
        overrides = {k: float(v) for k, v in case_sec.items()}
        try:
            case = replace(case, material=material, arch=arch, grid=grid, iterations=iterations, **overrides)
        except ValueError as e:
            raise ConfigError(str(e), "case") from None
        geometry = case.geometry()
        face_length = case.face_length
    elif geo_sec:
        geometry = _custom_geometry(geo_sec)
        face_length = geometry.extra.get("face_length")
    else:
        raise ConfigError("either 'benchmark' or 'geometry' is required", "geometry")

    problem = ProblemDefinition(
        material,
        geometry,
        grid,
        None if samp.get("boundary_density") is None else _number(samp, "boundary_density", "sampling", positive=True),
        exclusion_factor=float(samp.get("exclusion_factor", 1e-3)),
    )

    weights = tr.get("weights") or {}
    if not isinstance(weights, dict) or set(weights) - set(TERMS):
        bad = sorted(set(weights) - set(TERMS)) if isinstance(weights, dict) else ["?"]
        raise ConfigError(f"unknown key 'training.weights.{bad[0]}'", f"training.weights.{bad[0]}")
    train_kwargs = {
        "iterations": iterations,
        "weights": {k: float(v) for k, v in weights.items()} or None,
    }
    for key, kind in (("adam_fraction", float), ("learning_rate", float), ("lbfgs_history", int), ("log_every", int)):
        if key in tr:
            train_kwargs[key] = _number(tr, key, "training", kind)
    try:
        training = TrainingConfig(**train_kwargs)
    except ValueError as e:
        raise ConfigError(f"invalid training settings: {e}", "training") from None

    s = _section(raw, "sif")
    window = _pair(s["window"], "sif.window") if "window" in s else DEFAULT_WINDOW
    if not 0 < window[0] < window[1]:
        raise ConfigError("'sif.window' must satisfy 0 < lo < hi", "sif.window")
    n_samples = int(s.get("samples", DEFAULT_SAMPLES))
    tip = int(s.get("tip", 0))
    if not 0 <= tip < len(geometry.tip_positions):
        raise ConfigError(f"'sif.tip' must index one of {len(geometry.tip_positions)} tips", "sif.tip")

    seeds = raw.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = [seeds]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(v, int) for v in seeds):
        raise ConfigError("'seeds' must be a non-empty list of integers", "seeds")
    output = str(raw.get("output", base or "out"))
    return RunConfig(
        problem, arch, training, bool(tr.get("enriched", True)), window, n_samples, tip, face_length,
        tuple(seeds), output, case, raw,
    )


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    return parse_config_text(text)


def benchmark_ids():
    return BENCHMARK_IDS


# ---------------------------------------------------------------- files

def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write_text(path, csv_text(header, rows))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_kstar_curve(path, samples):
    write_csv(path, ("r", "k1_star", "k2_star"), [(s.r, s.k1_star, s.k2_star) for s in samples])


def read_kstar_curve(path):
    from .sif import KStarSample

    header, rows = read_csv(path)
    if tuple(header[:3]) != ("r", "k1_star", "k2_star"):
        raise ValueError(f"{path}: expected header r,k1_star,k2_star")
    return [KStarSample(float(r[0]), float(r[1]), float(r[2])) for r in rows]


def write_log(path, records):
    """Line-delimited JSON training log."""
    atomic_write_text(path, "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records))


def read_log(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------- checkpoints

def checkpoint_dict(model: EnrichedModel, geometry: CrackedGeometry | None = None):
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "enriched": model.enriched,
        "material": model.material.to_dict(),
        "networks": [{"architecture": n.architecture(), "params": n.flat_params().tolist()} for n in model.networks],
        "tips": [t.to_dict() for t in model.tips],
        "subdomains": [s.to_dict() for s in model.subdomains],
        "geometry": None if geometry is None else geometry.to_dict(),
    }


def save_checkpoint(path, model: EnrichedModel, geometry: CrackedGeometry | None = None):
    atomic_write_text(path, json.dumps(checkpoint_dict(model, geometry)))


def model_from_dict(d):
    """Rebuild ``(model, geometry)`` from a checkpoint mapping."""
    try:
        if d.get("format") != CHECKPOINT_FORMAT:
            raise CorruptCheckpointError("not a checkpoint file")
        if d.get("version") != CHECKPOINT_VERSION:
            raise CorruptCheckpointError(f"unsupported checkpoint version {d.get('version')}")
        nets = tuple(
            Network.from_architecture(n["architecture"], np.asarray(n["params"], dtype=float)) for n in d["networks"]
        )
        tips = tuple(
            CrackTip(tuple(t["position"]), t["orientation"], t["ktilde_I"], t["ktilde_II"], t["exclusion_radius"])
            for t in d["tips"]
        )
        subs = tuple(SubdomainSpec.from_dict(s) for s in d["subdomains"])
        material = Material(**d["material"])
        model = EnrichedModel(nets, tips, material, subs, bool(d["enriched"]))
        geometry = None if d.get("geometry") is None else CrackedGeometry.from_dict(d["geometry"])
    except CorruptCheckpointError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise CorruptCheckpointError(f"corrupt checkpoint: {e}") from None
    return model, geometry


def load_checkpoint(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as e:
        raise CorruptCheckpointError(f"cannot read checkpoint {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise CorruptCheckpointError(f"corrupt checkpoint {path}: {e}") from None
    if not isinstance(d, dict):
        raise CorruptCheckpointError("corrupt checkpoint: top level is not a mapping")
    return model_from_dict(d)


# ---------------------------------------------------------------- fields

def evaluate_fields(model: EnrichedModel, points, body_force=(0.0, 0.0)):
    """Displacements, stresses and Navier residuals at ``points`` (N, 2).

    Returns an (N, 7) array with columns u1, u2, s11, s22, s12, r1, r2.
    Rows for points inside a tip's exclusion radius, or outside every
    subdomain, are NaN.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full((len(x), 7), np.nan)
    ok = np.ones(len(x), dtype=bool)
    for tip in model.tips:
        d = np.hypot(*(x - np.asarray(tip.position)).T)
        ok &= d >= tip.exclusion_radius
    if model.subdomains:
        owner = model.locate(x)
        ok &= owner >= 0
    else:
        owner = np.zeros(len(x), dtype=int)
    for s in np.unique(owner[ok]):
        idx = ok & (owner == s)
        try:
            u = model.displacement_jets(x[idx], subdomain=int(s) if model.subdomains else None)
        except AtTipError:
            continue
        s = stress_from_jets(u, model.material)
        r1, r2 = navier_residual_jets(u, model.material, body_force)
        out[idx] = np.column_stack([u[VAL, :, 0], u[VAL, :, 1], s.s11, s.s22, s.s12, r1, r2])
    return out


def field_grid(x_range, y_range):
    """Row-major evaluation grid from ``(lo, hi, n)`` triples."""
    xs = np.linspace(x_range[0], x_range[1], int(x_range[2]))
    ys = np.linspace(y_range[0], y_range[1], int(y_range[2]))
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def write_fields(path, points, values):
    rows = [tuple(p) + tuple(v) for p, v in zip(points.tolist(), values.tolist())]
    write_csv(path, FIELD_HEADER, rows)
