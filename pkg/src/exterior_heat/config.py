"""JSON experiment configuration.

The schema is documented in ``docs/formats.md``. Parsing is strict: unknown
keys, wrong types and out-of-range values raise :class:`ConfigParse` (or
:class:`OutOfRange` for theta) with the offending field path in the message.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .boundary import THETA_EXPRESSIONS, Constant, Outer, ThetaSpec
from .errors import ConfigParse, OutOfRange
from .geometry import BallHole, DomainSpec, MaskHole, validate
from .shapes import SHAPES
from .slowdecay import TARGETS

TASKS = ("profile", "pprofile", "evolve", "kernel", "mass", "rates", "slowdecay", "verify")

_TOP_KEYS = {"task", "domain", "theta", "gamma", "solver", "params", "output_dir", "dump_matrix"}

# allowed parameter keys per task
_PARAM_KEYS = {
    "profile": {"ladder", "window", "window_tol"},
    "pprofile": {"times", "schedule", "dt0", "growth", "probe_radius"},
    "evolve": {"u0", "times", "schedule", "dt0", "growth", "flux_warning"},
    "kernel": {"sources", "times", "schedule", "dt0", "growth"},
    "mass": {"u0", "ladder", "window", "window_tol", "times", "schedule", "dt0", "growth"},
    "rates": {"u0", "ladder", "window", "window_tol", "times", "schedule", "dt0", "growth", "fit_window", "m_inf"},
    "slowdecay": {"target", "count", "max_extent", "simulate", "eigen_resolution", "slack", "margin"},
    "verify": {"level", "only"},
}


@dataclass
class ExperimentConfig:
    task: str
    domain: DomainSpec | None
    theta: ThetaSpec | None
    params: dict = field(default_factory=dict)
    gamma: float = 0.0
    tol: float = 1e-10
    max_iter: int | None = None
    output_dir: str = "out"
    dump_matrix: bool = False
    raw: dict = field(default_factory=dict, repr=False)


def _number(value, path, positive=False, allow_zero=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigParse(f"{path} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigParse(f"{path} must be finite, got {value}")
    if positive and (value < 0 or (value == 0 and not allow_zero)):
        raise ConfigParse(f"{path} must be {'positive' if not allow_zero else 'nonnegative'}, got {value}")
    return value


def _vector(value, path, length=None):
    if not isinstance(value, (list, tuple)):
        raise ConfigParse(f"{path} must be a list of numbers, got {value!r}")
    out = [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise ConfigParse(f"{path} must have {length} entries, got {len(out)}")
    return out


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigParse(f"{path} must be an object, got {obj!r}")
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigParse(f"unknown key(s) in {path}: {sorted(extra)}")


def _require(obj, key, path):
    if key not in obj:
        raise ConfigParse(f"missing required field {path}.{key}")
    return obj[key]


def parse_domain(obj, path="domain") -> DomainSpec:
    _check_keys(obj, {"dimension", "hole", "truncation_radius", "spacing"}, path)
    dim = _require(obj, "dimension", path)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ConfigParse(f"{path}.dimension must be a positive integer, got {dim!r}")
    R = _number(_require(obj, "truncation_radius", path), f"{path}.truncation_radius", positive=True, allow_zero=False)
    h = _number(_require(obj, "spacing", path), f"{path}.spacing", positive=True, allow_zero=False)
    hole_obj = _require(obj, "hole", path)
    hp = f"{path}.hole"
    if not isinstance(hole_obj, dict):
        raise ConfigParse(f"{hp} must be an object")
    kind = hole_obj.get("type")
    if kind == "ball":
        _check_keys(hole_obj, {"type", "radius"}, hp)
        hole = BallHole(_number(_require(hole_obj, "radius", hp), f"{hp}.radius", positive=True, allow_zero=False))
    elif kind == "mask":
        _check_keys(hole_obj, {"type", "boxes", "balls"}, hp)
        boxes, balls = [], []
        for i, b in enumerate(hole_obj.get("boxes", [])):
            bp = f"{hp}.boxes[{i}]"
            _check_keys(b, {"center", "half_widths"}, bp)
            c = _vector(b.get("center", [0.0] * dim), f"{bp}.center", dim)
            w = _vector(_require(b, "half_widths", bp), f"{bp}.half_widths", dim)
            boxes.append((tuple(c), tuple(w)))
        for i, b in enumerate(hole_obj.get("balls", [])):
            bp = f"{hp}.balls[{i}]"
            _check_keys(b, {"center", "radius"}, bp)
            c = _vector(b.get("center", [0.0] * dim), f"{bp}.center", dim)
            r = _number(_require(b, "radius", bp), f"{bp}.radius", positive=True, allow_zero=False)
            balls.append((tuple(c), r))
        if not boxes and not balls:
            raise ConfigParse(f"{hp} needs at least one box or ball")
        hole = MaskHole(tuple(boxes), tuple(balls))
    else:
        raise ConfigParse(f"{hp}.type must be 'ball' or 'mask', got {kind!r}")
    spec = DomainSpec(dim, hole, R, h)
    validate(spec)
    return spec


def _theta_field(value, path):
    if isinstance(value, bool):
        raise ConfigParse(f"{path} must be a number or an expression object")
    if isinstance(value, (int, float)):
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise OutOfRange(f"{path} must lie in [0, 1], got {value}")
        return Constant(value)
    if isinstance(value, dict):
        name = value.get("type")
        if name not in THETA_EXPRESSIONS:
            raise ConfigParse(f"{path}.type must be one of {sorted(THETA_EXPRESSIONS)}, got {name!r}")
        params = {k: v for k, v in value.items() if k != "type"}
        for k, v in params.items():
            _number(v, f"{path}.{k}")
        try:
            return THETA_EXPRESSIONS[name](**params)
        except TypeError as exc:
            raise ConfigParse(f"bad parameters in {path}: {exc}") from None
    raise ConfigParse(f"{path} must be a number or an expression object, got {value!r}")


def parse_theta(obj, path="theta") -> ThetaSpec:
    if not isinstance(obj, dict):
        return ThetaSpec(default=_theta_field(obj, path))
    _check_keys(obj, {"default", "components", "outer"}, path)
    default = _theta_field(obj["default"], f"{path}.default") if "default" in obj else None
    comps = {}
    for key, val in (obj.get("components") or {}).items():
        try:
            idx = int(key)
        except ValueError:
            raise ConfigParse(f"{path}.components keys must be integers, got {key!r}") from None
        comps[idx] = _theta_field(val, f"{path}.components.{key}")
    outer = Outer.DIRICHLET0
    if "outer" in obj:
        try:
            outer = Outer(obj["outer"])
        except ValueError:
            raise ConfigParse(
                f"{path}.outer must be one of {[o.value for o in Outer]}, got {obj['outer']!r}"
            ) from None
    return ThetaSpec(comps, default, outer)


def _check_u0(u0, path):
    _check_keys(u0, set(u0) if isinstance(u0, dict) else set(), path)
    shape = u0.get("shape")
    if shape not in SHAPES:
        raise ConfigParse(f"{path}.shape must be one of {sorted(SHAPES)}, got {shape!r}")
    for k, v in u0.items():
        if k == "shape":
            continue
        if isinstance(v, list):
            _vector(v, f"{path}.{k}")
        else:
            _number(v, f"{path}.{k}")


def _check_params(task, params):
    _check_keys(params, _PARAM_KEYS[task], "params")
    for key in ("times", "ladder"):
        if key in params:
            vals = _vector(params[key], f"params.{key}")
            if not vals or any(v <= 0 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigParse(f"params.{key} must be positive and strictly increasing")
    if "schedule" in params:
        s = params["schedule"]
        _check_keys(s, {"t_lo", "t_hi", "count"}, "params.schedule")
        lo = _number(_require(s, "t_lo", "params.schedule"), "params.schedule.t_lo", positive=True, allow_zero=False)
        hi = _number(_require(s, "t_hi", "params.schedule"), "params.schedule.t_hi", positive=True, allow_zero=False)
        count = _require(s, "count", "params.schedule")
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigParse(f"params.schedule.count must be a positive integer, got {count!r}")
        if hi < lo:
            raise ConfigParse("params.schedule.t_hi must not be below t_lo")
    for key in ("dt0", "window", "window_tol", "probe_radius", "max_extent", "slack"):
        if key in params and params[key] is not None:
            _number(params[key], f"params.{key}", positive=True, allow_zero=False)
    if "growth" in params and _number(params["growth"], "params.growth") < 1:
        raise ConfigParse(f"params.growth must be >= 1, got {params['growth']}")
    if "u0" in params:
        _check_u0(params["u0"], "params.u0")
    if task in ("evolve", "mass", "rates") and "u0" not in params:
        raise ConfigParse(f"task {task} needs params.u0")
    if task in ("evolve", "kernel", "pprofile", "mass", "rates") and not ({"times", "schedule"} & set(params)):
        raise ConfigParse(f"task {task} needs params.times or params.schedule")
    if task == "kernel":
        srcs = _require(params, "sources", "params")
        if not isinstance(srcs, list) or not srcs:
            raise ConfigParse("params.sources must be a non-empty list of points")
        for i, p in enumerate(srcs):
            _vector(p, f"params.sources[{i}]")
    if task == "rates":
        fw = _vector(_require(params, "fit_window", "params"), "params.fit_window", 2)
        if not 0 < fw[0] < fw[1]:
            raise ConfigParse("params.fit_window must satisfy 0 < lo < hi")
    if task == "slowdecay":
        tgt = params.get("target", {"type": "inverse"})
        _check_keys(tgt, set(tgt) if isinstance(tgt, dict) else set(), "params.target")
        if tgt.get("type") not in TARGETS:
            raise ConfigParse(f"params.target.type must be one of {sorted(TARGETS)}, got {tgt.get('type')!r}")
        count = params.get("count", 5)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigParse(f"params.count must be a positive integer, got {count!r}")
        sim = params.get("simulate", [1, 2])
        if not isinstance(sim, list) or any(not isinstance(n, int) or not 1 <= n <= count for n in sim):
            raise ConfigParse(f"params.simulate must list bump indices in 1..{count}")
    if task == "verify":
        if params.get("level", "quick") not in ("quick", "full"):
            raise ConfigParse(f"params.level must be 'quick' or 'full', got {params.get('level')!r}")


def parse_config(obj: dict, task: str | None = None) -> ExperimentConfig:
    """Validate a decoded JSON config; ``task`` (from the command line) wins over ``obj['task']``."""
    _check_keys(obj, _TOP_KEYS, "config")
    declared = obj.get("task")
    if task is not None and declared is not None and declared != task:
        raise ConfigParse(f"config.task is {declared!r} but the {task!r} subcommand was invoked")
    task = task or declared
    if task not in TASKS:
        raise ConfigParse(f"config.task must be one of {list(TASKS)}, got {task!r}")

    params = obj.get("params", {})
    _check_params(task, params)

    domain = theta = None
    if task != "verify":
        domain = parse_domain(_require(obj, "domain", "config"))
        theta = parse_theta(_require(obj, "theta", "config"))

    gamma = _number(obj.get("gamma", 0.0), "gamma", positive=True)
    solver = obj.get("solver", {})
    _check_keys(solver, {"tol", "max_iter"}, "solver")
    tol = _number(solver.get("tol", 1e-10), "solver.tol", positive=True, allow_zero=False)
    max_iter = solver.get("max_iter")
    if max_iter is not None and (isinstance(max_iter, bool) or not isinstance(max_iter, int) or max_iter < 1):
        raise ConfigParse(f"solver.max_iter must be a positive integer, got {max_iter!r}")
    out = obj.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise ConfigParse("output_dir must be a non-empty string")
    dump = obj.get("dump_matrix", False)
    if not isinstance(dump, bool):
        raise ConfigParse("dump_matrix must be true or false")
    return ExperimentConfig(task, domain, theta, params, gamma, tol, max_iter, out, dump, raw=obj)


def load_config(path, task: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(obj, task)
