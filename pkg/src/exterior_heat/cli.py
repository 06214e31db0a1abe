"""Command-line experiment runner.

Each invocation runs one task from a JSON config and writes CSV data files
plus ``report.json`` into the output directory. Exit status: 0 on success,
1 on a hard numerical error or a failed verification, 2 on a bad config.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .boundary import Outer, classify_boundary
from .config import TASKS, ExperimentConfig, load_config, parse_config
from .errors import ConfigParse, ExteriorHeatError, OutOfRange
from .geometry import build_grid
from .heat import TimeSchedule, evolve, kernel_column, parabolic_profile
from .mass import asymptotic_mass, conserved_functional, fit_decay_exponent
from .operator import assemble_operator
from .profile import compute_profile
from .shapes import build_initial
from .slowdecay import TARGETS, simulate_bump, slow_decay_construct
from .verify import verify_suite

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "BLIS_NUM_THREADS")


def fmt(x) -> str:
    """17 significant digits, so every written float round-trips exactly."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


class _Writer:
    def __init__(self, out: Path):
        self.out = out
        self.files = []

    def csv(self, name, header, rows):
        path = self.out / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        self.files.append(name)

    def json(self, name, payload):
        path = self.out / name
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")
        self.files.append(name)


def coordinate_columns(grid) -> list:
    if grid.kind == "radial":
        return ["s"]
    return [f"x{k + 1}" for k in range(grid.dimension)]


def _coords(grid):
    return grid.radius[:, None] if grid.kind == "radial" else grid.coords


def _schedule(params, grid) -> TimeSchedule:
    dt0 = params.get("dt0", grid.spacing**2)
    growth = params.get("growth", 1.05)
    if "times" in params:
        return TimeSchedule(tuple(params["times"]), dt0, growth)
    s = params["schedule"]
    return TimeSchedule.geometric(s["t_lo"], s["t_hi"], s["count"], dt0, growth)


def _operator(cfg: ExperimentConfig, spec=None, outer=None):
    spec = spec or cfg.domain
    grid = build_grid(spec)
    theta = cfg.theta if outer is None else cfg.theta.with_outer(outer)
    return assemble_operator(grid, classify_boundary(grid, theta), cfg.gamma)


def _snapshot_rows(grid, snapshots):
    xs = _coords(grid)
    for t, u in snapshots:
        for x, v in zip(xs, u):
            yield (t, *x, v)


def _profile(cfg, params):
    return compute_profile(
        cfg.domain,
        cfg.theta,
        ladder=params.get("ladder"),
        window=params.get("window"),
        window_tol=params.get("window_tol", 1e-3),
        tol=cfg.tol,
        max_iter=cfg.max_iter,
    )


def _task_profile(cfg, w, report):
    res = _profile(cfg, cfg.params)
    grid = res.grid
    w.csv("phi.csv", coordinate_columns(grid) + ["phi"], ((*x, v) for x, v in zip(_coords(grid), res.phi)))
    w.csv(
        "ladder.csv",
        ["R", "sup_difference", "iterations", "residual"],
        ((s.radius, s.sup_difference, s.iterations, s.residual) for s in res.ladder),
    )
    report.update(res.report())
    if not res.converged:
        warnings.warn(
            f"profile ladder did not settle on |x| <= {res.window}: last sup-difference "
            f"{res.ladder[-1].sup_difference} is not below {cfg.params.get('window_tol', 1e-3)}",
            RuntimeWarning,
        )
    return res.operator


def _task_pprofile(cfg, w, report):
    op = _operator(cfg, outer=Outer.FIXED_VALUE)
    p = cfg.params
    sched = _schedule(p, op.grid)
    ev = parabolic_profile(
        op, sched.output_times, sched.dt0, sched.growth, tol=cfg.tol, probe_radius=p.get("probe_radius")
    )
    w.csv("snapshots.csv", ["t", *coordinate_columns(op.grid), "u"], _snapshot_rows(op.grid, ev.snapshots))
    report.update(ev.report())
    return op


def _task_evolve(cfg, w, report):
    op = _operator(cfg)
    p = cfg.params
    u0 = build_initial(op.grid, p["u0"])
    ev = evolve(op, u0, _schedule(p, op.grid), tol=cfg.tol, max_iter=cfg.max_iter, flux_warning=p.get("flux_warning", True))
    grid = op.grid
    w.csv("snapshots.csv", ["t", *coordinate_columns(grid), "u"], _snapshot_rows(grid, ev.snapshots))
    w.csv("mass.csv", ["t", "m", "m_inf", "residual"], ev.mass_trace.rows())
    w.csv("flux.csv", ["t", "flux", "cumulative_loss"], zip(ev.times, ev.outer_flux, ev.outer_loss))
    report.update(ev.report())
    return op


def _task_kernel(cfg, w, report):
    op = _operator(cfg)
    p = cfg.params
    sched = _schedule(p, op.grid)
    grid = op.grid
    xs = _coords(grid)
    rows, sources = [], []
    for k, point in enumerate(p["sources"]):
        node = grid.nearest_node(point)
        sources.append({"index": k, "point": point, "node": node, "node_position": xs[node].tolist()})
        for t in sched.output_times:
            col = kernel_column(op, node, t, dt0=min(sched.dt0, t), growth=sched.growth, tol=min(cfg.tol, 1e-13))
            rows.extend((t, k, *x, v) for x, v in zip(xs, col))
    w.csv("kernel.csv", ["t", "source", *coordinate_columns(grid), "k"], rows)
    report["sources"] = sources
    return op


def _mass_run(cfg, w, report):
    p = cfg.params
    res = _profile(cfg, p)
    report["profile"] = res.report()
    report["converged"] = res.converged
    if not res.converged:
        warnings.warn("profile ladder did not settle; m_inf carries the ladder error", RuntimeWarning)
    grid = res.grid
    u0 = build_initial(grid, p["u0"])
    m_inf = asymptotic_mass(u0, res)
    op = _operator(cfg, spec=grid.spec)
    ev = evolve(op, u0, _schedule(p, grid), tol=cfg.tol, max_iter=cfg.max_iter)
    series = np.array([v for _, v in conserved_functional(ev, res)])
    report.update(ev.report())
    report["asymptotic_mass"] = m_inf
    report["functional_drift"] = float(np.max(np.abs(series - m_inf)) / abs(m_inf)) if m_inf else None
    return res, op, ev, m_inf


def _task_mass(cfg, w, report):
    _, op, ev, m_inf = _mass_run(cfg, w, report)
    w.csv("mass.csv", ["t", "m", "m_inf", "residual"], ev.mass_trace.rows(m_inf))
    return op


def _task_rates(cfg, w, report):
    _, op, ev, m_inf = _mass_run(cfg, w, report)
    m_inf = cfg.params.get("m_inf", m_inf)
    w.csv("mass.csv", ["t", "m", "m_inf", "residual"], ev.mass_trace.rows(m_inf))
    fit = fit_decay_exponent(ev.mass_trace, m_inf, tuple(cfg.params["fit_window"]))
    report["fit"] = {
        "exponent": fit.exponent,
        "amplitude": fit.amplitude,
        "r_squared": fit.r_squared,
        "points": fit.points,
        "window": cfg.params["fit_window"],
        "m_inf": m_inf,
    }
    return op


def _task_slowdecay(cfg, w, report):
    p = cfg.params
    tgt = dict(p.get("target", {"type": "inverse"}))
    target = TARGETS[tgt.pop("type")](**tgt)
    plan = slow_decay_construct(
        cfg.domain.dimension,
        cfg.domain,
        target,
        p.get("count", 5),
        max_extent=p.get("max_extent"),
        eigen_resolution=p.get("eigen_resolution", 1000),
    )
    desc = plan.describe()
    w.json("plan.json", desc)
    w.csv(
        "bumps.csv",
        ["n", "t", "g_t", "R", "center", "weight", "retention"],
        ((b["n"], b["t"], b["g_t"], b["R"], b["center"], b["weight"], b["retention"]) for b in desc["bumps"]),
    )
    checks = []
    for n in p.get("simulate", [1, 2]):
        c = simulate_bump(plan, n, cfg.domain, cfg.theta, margin=p.get("margin", 4.0), tol=cfg.tol, slack=p.get("slack", 0.05))
        checks.append(c)
    w.csv(
        "bump_checks.csv",
        ["n", "t", "initial_mass", "mass", "bound", "passed"],
        ((c.n, c.time, c.initial_mass, c.mass, c.bound, int(c.passed)) for c in checks),
    )
    report["violations"] = desc["violations"]
    report["bump_checks"] = [
        {"n": c.n, "mass": c.mass, "bound": c.bound, "slack": c.slack, "nodes": c.nodes, "passed": c.passed}
        for c in checks
    ]
    report["plan_valid"] = not desc["violations"] and all(c.passed for c in checks)
    return None


def _task_verify(cfg, w, report):
    summary = verify_suite(cfg.params.get("level", "quick"), cfg.params.get("only"))
    # wall-clock timings are left out so repeated runs give identical files
    payload = {"level": summary["level"], "passed": summary["passed"], "checks": [
        {"name": c["name"], "passed": c["passed"], "detail": c["detail"]} for c in summary["checks"]
    ]}
    w.json("verify.json", payload)
    report["passed"] = summary["passed"]
    report["checks"] = [{"name": c["name"], "passed": c["passed"]} for c in summary["checks"]]
    return None


_TASKS = {
    "profile": _task_profile,
    "pprofile": _task_pprofile,
    "evolve": _task_evolve,
    "kernel": _task_kernel,
    "mass": _task_mass,
    "rates": _task_rates,
    "slowdecay": _task_slowdecay,
    "verify": _task_verify,
}


def run_experiment(cfg: ExperimentConfig, out=None) -> dict:
    """Run one experiment, write its files and return the report.

    Hard errors propagate after the partial report (with the error) has
    been written.
    """
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    w = _Writer(out)
    report = {
        "task": cfg.task,
        "config": cfg.raw,
        "solver": {"tol": cfg.tol, "max_iter": cfg.max_iter},
        "status": "ok",
    }
    caught = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            op = _TASKS[cfg.task](cfg, w, report)
        if cfg.dump_matrix and op is not None:
            op.dump_coo(out / "matrix.coo")
            w.files.append("matrix.coo")
    except Exception as exc:
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        raise
    finally:
        msgs = []
        for item in caught:
            m = f"{item.category.__name__}: {item.message}"
            if m not in msgs:
                msgs.append(m)
        report["warnings"] = msgs
        report.setdefault("converged", report["status"] == "ok")
        report["outputs"] = sorted(w.files + ["report.json"])
        w.json("report.json", report)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exterior-heat", description="Heat flow and mass loss on exterior domains."
    )
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", type=Path, help="JSON experiment config (optional for verify)")
    parser.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    parser.add_argument("--single-thread", action="store_true", help="pin BLAS/OpenMP pools to one thread")
    parser.add_argument("--tol", type=float, help="linear solver tolerance (overrides solver.tol)")
    parser.add_argument("--level", choices=("quick", "full"), help="verify level (overrides params.level)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.single_thread:
        for var in _THREAD_VARS:
            os.environ[var] = "1"
    try:
        if args.config is None:
            if args.task != "verify":
                raise ConfigParse(f"task {args.task} needs --config")
            cfg = parse_config({"task": "verify"})
        else:
            cfg = load_config(args.config, args.task)
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigParse(f"--tol must be positive, got {args.tol}")
            cfg.tol = args.tol
        if args.level is not None and cfg.task == "verify":
            cfg.params = dict(cfg.params, level=args.level)
    except (ConfigParse, OutOfRange, ExteriorHeatError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(cfg, args.out)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for m in report["warnings"]:
        print(f"warning: {m}", file=sys.stderr)
    print(f"{cfg.task}: wrote {', '.join(report['outputs'])} to {args.out or cfg.output_dir}")
    if cfg.task == "verify" and not report.get("passed", False):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
