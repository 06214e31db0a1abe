"""Bundled verification: quick smoke checks and the full acceptance suite.

Every check returns a :class:`CheckResult`; failures and exceptions are
reported as data.
"""

from __future__ import annotations

import math
import time
import traceback
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .boundary import Constant, Outer, ThetaSpec, angular_sine, classify_boundary, robin_coefficient
from .eigen import dirichlet_ball_eigenpair
from .errors import ExteriorHeatError, TruncationWarning
from .geometry import BallHole, DomainSpec, MaskHole, build_grid, shared_nodes
from .heat import Stepper, TimeSchedule, evolve, kernel_column, parabolic_profile
from .linsolve import solve_spd
from .mass import asymptotic_mass, conserved_functional, fit_decay_exponent, MassTrace
from .operator import assemble_operator
from .profile import closed_form_profile, compute_profile, profile_constant, solve_truncated_profile
from .shapes import gaussian_bump, indicator_annulus
from .slowdecay import inverse_target, level_time, power_target, simulate_bump, slow_decay_construct


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name} ({self.seconds:.1f}s) {self.detail}"


def _run(name, fn) -> CheckResult:
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            passed, detail = fn()
    except Exception as exc:  # failures are data here
        passed, detail = False, {"error": f"{type(exc).__name__}: {exc}", "trace": traceback.format_exc(limit=3)}
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def _op(spec, theta, outer, gamma=0.0):
    grid = build_grid(spec)
    ts = theta if isinstance(theta, ThetaSpec) else ThetaSpec.constant(theta)
    return assemble_operator(grid, classify_boundary(grid, ts.with_outer(outer)), gamma)


# ---------------------------------------------------------------- acceptance


def closed_form_match():
    """Truncated annulus profiles against the exact radial solution."""
    t0 = time.perf_counter()
    errors = {}
    ok = True
    for N in (1, 2, 3):
        for theta in (0.0, 0.25, 0.5, 0.75):
            spec = DomainSpec(N, BallHole(1.0), 4.0, 0.01)
            tp = solve_truncated_profile(spec, ThetaSpec.constant(theta, Outer.FIXED_VALUE))
            exact = closed_form_profile(N, 1.0, theta, tp.grid.radius, 4.0)
            err = float(np.abs(tp.phi - exact).max())
            errors[f"N={N},theta={theta}"] = err
            ok &= err <= (0.01 if theta == 0 else 0.03)
    elapsed = time.perf_counter() - t0
    return ok and elapsed <= 10.0, {"sup_errors": errors, "runtime_s": elapsed}


def limit_profile_constant():
    t0 = time.perf_counter()
    detail = {"C_half": profile_constant(3, 0.5)}
    ok = math.isclose(detail["C_half"], 2.0, rel_tol=1e-12)
    for theta in (0.0, 0.5):
        res = compute_profile(
            DomainSpec(3, BallHole(1.0), 4.0, 0.01),
            ThetaSpec.constant(theta),
            ladder=[4, 8, 16, 32],
            window=3.0,
        )
        expected = 1 - 1 / (profile_constant(3, theta) * 2)
        got = res.value_at([2.0])
        detail[f"theta={theta}"] = {"phi(2)": got, "expected": expected, "abs_err": abs(got - expected)}
        ok &= abs(got - expected) <= 0.02
    elapsed = time.perf_counter() - t0
    detail["runtime_s"] = elapsed
    return ok and elapsed <= 60.0, detail


def dimension_dichotomy():
    t0 = time.perf_counter()
    ladder = [4, 8, 16, 32]
    res2 = compute_profile(DomainSpec(2, BallHole(1.0), 4.0, 0.01), ThetaSpec.constant(0.0), ladder=ladder)
    v2 = res2.ladder_values([2.0])
    law = np.log(2.0) / np.log(ladder)
    rel2 = np.abs(v2 - law) / law
    ok2 = bool(np.all(np.diff(v2) < 0) and np.all(rel2 <= 0.02) and not res2.converged)

    res3 = compute_profile(DomainSpec(3, BallHole(1.0), 4.0, 0.01), ThetaSpec.constant(0.0), ladder=ladder)
    v3 = res3.ladder_values([2.0])
    sups = [s.sup_difference for s in res3.ladder[1:]]
    s = res3.grid.radius
    C = 1.0  # enclosing ball of the unit hole
    lower = 1 - C / s
    ok3 = bool(
        np.all(np.diff(v3) <= 0)
        and all(b < a for a, b in zip(sups, sups[1:]))
        and np.all(res3.phi >= lower - 1e-10)
        and np.all(res3.phi <= 1 + 1e-10)
        and v3[-1] > 0.4
    )

    # staircase cube hole in 3-D, Robin theta = 1/2
    h = 0.25
    spec = DomainSpec(3, MaskHole.box(0.5, dimension=3), 4.0, h)
    res_c = compute_profile(spec, ThetaSpec.constant(0.5), ladder=[4, 8], window=2.0)
    grid = res_c.grid
    masked = np.array([[i, j, k] for i in (-2, -1, 0, 1, 2) for j in (-2, -1, 0, 1, 2) for k in (-2, -1, 0, 1, 2)]) * h
    masked = masked[spec.hole.contains(masked)]
    rho = np.linalg.norm(masked, axis=1).max() + h * math.sqrt(3) / 2
    lower_c = 1 - rho / grid.radius
    ok_c = bool(np.all(res_c.phi >= lower_c - 1e-10) and np.all(res_c.phi <= 1 + 1e-10))

    elapsed = time.perf_counter() - t0
    detail = {
        "N2_values": v2.tolist(),
        "N2_log_law": law.tolist(),
        "N2_rel_err": rel2.tolist(),
        "N3_values": v3.tolist(),
        "N3_sup_differences": sups,
        "N3_min_margin": float((res3.phi - lower).min()),
        "cube_enclosing_radius": rho,
        "cube_min_margin": float((res_c.phi - lower_c).min()),
        "runtime_s": elapsed,
    }
    return ok2 and ok3 and ok_c and elapsed <= 60.0, detail


def neumann_conservation():
    detail = {}
    ok = True
    cases = {
        "radial_N3": (DomainSpec(3, BallHole(1.0), 8.0, 0.05), {"center": 3.0, "width": 1.0}),
        "cartesian_N2": (DomainSpec(2, MaskHole.box(0.5), 4.0, 0.1), {"center": [2.0, 0.0], "width": 0.7}),
    }
    for name, (spec, bump) in cases.items():
        op = _op(spec, 1.0, Outer.NEUMANN0)
        u0 = gaussian_bump(op.grid, **bump)
        sched = TimeSchedule(tuple(np.arange(1, 11) * 1.0), 0.01, 1.0)
        ev = evolve(op, u0, sched, tol=1e-12)
        m0 = ev.initial_mass
        drift = float(np.max(np.abs(ev.mass_trace.masses - m0)) / m0)
        detail[name] = {"steps": ev.steps, "relative_drift": drift}
        ok &= ev.steps >= 1000 and drift <= 1e-8
    return ok, detail


def profiles_coincide():
    res = compute_profile(DomainSpec(3, BallHole(1.0), 4.0, 0.05), ThetaSpec.constant(0.0), ladder=[4, 8, 16, 32])
    op = res.operator
    pp = parabolic_profile(op, [10.0, 100.0, 1000.0, 5000.0])
    R = op.grid.spec.truncation_radius
    window = op.grid.radius <= R / 4
    diff = float(np.abs(pp.final[window] - res.phi[window]).max())
    stepper = Stepper(op, tol=1e-13)
    u = res.phi.copy()
    for dt in (0.1, 1.0, 10.0, 100.0):
        u = stepper.step(u, dt)
    fixed_point = float(np.abs(u - res.phi).max())
    detail = {"max_abs_diff_window": diff, "fixed_point_err": fixed_point, "warnings": pp.warnings}
    return diff <= 0.02 and fixed_point <= 1e-8, detail


def asymptotic_mass_formula():
    res = compute_profile(
        DomainSpec(3, BallHole(1.0), 16.0, 0.02), ThetaSpec.constant(0.0), ladder=[16, 32, 64, 128], window=8.0
    )
    grid = res.grid
    u0 = indicator_annulus(grid, 2.0, 3.0)
    m_inf = asymptotic_mass(u0, res)
    exact = 46 * math.pi / 3
    rel = abs(m_inf - exact) / exact
    op = _op(grid.spec, 0.0, Outer.DIRICHLET0)
    ev = evolve(op, u0, TimeSchedule.geometric(0.1, 50.0, 20, grid.spacing**2), tol=1e-13)
    series = np.array([v for _, v in conserved_functional(ev, res)])
    drift = float(np.max(np.abs(series - m_inf)) / m_inf)
    detail = {"asymptotic_mass": m_inf, "exact": exact, "rel_err": rel, "functional_drift": drift}
    return rel <= 0.02 and drift <= 1e-6, detail


def decay_rate():
    t0 = time.perf_counter()
    h, R = 0.1, 400.0
    res = compute_profile(DomainSpec(3, BallHole(1.0), R / 2, h), ThetaSpec.constant(0.0), ladder=[R / 2, R], window=4.0)
    grid = res.grid
    u0 = indicator_annulus(grid, 2.0, 3.0)
    m_inf = asymptotic_mass(u0, res)
    op = _op(grid.spec, 0.0, Outer.DIRICHLET0)
    ev = evolve(op, u0, TimeSchedule.geometric(10.0, 1000.0, 30, h * h, 1.05), tol=1e-10)
    fit = fit_decay_exponent(ev.mass_trace, m_inf, (10.0, 1000.0))
    elapsed = time.perf_counter() - t0
    detail = {**asdict(fit), "m_inf": m_inf, "outer_loss": float(ev.outer_loss[-1]), "runtime_s": elapsed}
    return -0.6 <= fit.exponent <= -0.4 and fit.r_squared >= 0.98 and elapsed <= 300, detail


def slow_decay():
    t0 = time.perf_counter()
    hole = DomainSpec(2, MaskHole.ball(1.0), 4.0, 0.2)
    plan = slow_decay_construct(2, hole, inverse_target(), 5)
    violations = plan.violations()
    check = simulate_bump(plan, 1, hole, ThetaSpec.constant(0.0))
    elapsed = time.perf_counter() - t0
    detail = {
        "times": plan.times.tolist(),
        "radii": plan.radii.tolist(),
        "centers": plan.centers.tolist(),
        "violations": violations,
        "bump1_mass": check.mass,
        "bump1_threshold": 0.95 * 0.25,
        "runtime_s": elapsed,
    }
    return not violations and check.mass >= 0.95 * 0.25 and elapsed <= 600, detail


def _random_case(rng):
    """Random small exterior domain with two ordered theta fields."""
    if rng.random() < 0.5:
        N = int(rng.integers(1, 4))
        r = float(rng.choice([0.5, 1.0, 1.5]))
        h = 0.05
        R = r + h * int(rng.integers(30, 80))
        spec = DomainSpec(N, BallHole(r), R, h)
        t1 = float(rng.choice([0.0, rng.uniform(0.05, 0.95)]))
        t2 = float(min(1.0, t1 + rng.uniform(0.0, 0.8)))
        th1, th2 = ThetaSpec.constant(t1), ThetaSpec.constant(t2)
    else:
        h = 0.2
        if rng.random() < 0.5:
            hole = MaskHole.ball(float(rng.uniform(0.4, 1.2)))
        else:
            hole = MaskHole.box(rng.uniform(0.3, 1.0, size=2))
        spec = DomainSpec(2, hole, float(rng.uniform(3.0, 5.0)), h)
        if rng.random() < 0.5:
            mean = float(rng.uniform(0.3, 0.6))
            amp = float(rng.uniform(0.0, 0.25))
            th1 = ThetaSpec(default=angular_sine(mean, amp))
            th2 = ThetaSpec(default=angular_sine(mean + float(rng.uniform(0.0, 0.1)), amp))
        else:
            t1 = float(rng.choice([0.0, rng.uniform(0.05, 0.95)]))
            th1 = ThetaSpec.constant(t1)
            th2 = ThetaSpec.constant(float(min(1.0, t1 + rng.uniform(0.0, 0.8))))
    return spec, th1, th2


def property_suite(cases: int = 60, seed: int = 20240611):
    rng = np.random.default_rng(seed)
    counts = {k: 0 for k in ("order", "abs", "duality", "theta_profile", "theta_heat", "theta_kernel", "domain")}
    worst = {k: 0.0 for k in counts}
    errors = {}
    slack = 1e-10

    def check(key, fn):
        # a solver breakdown inside a check counts as a violation of that check
        try:
            violation = float(fn())
        except (ExteriorHeatError, ArithmeticError) as exc:
            counts[key] += 1
            worst[key] = math.inf
            errors.setdefault(key, f"{type(exc).__name__}: {exc}")
            return
        worst[key] = max(worst[key], violation)
        if violation > 0:
            counts[key] += 1

    nodes_max = 0
    for _ in range(cases):
        spec, th1, th2 = _random_case(rng)
        op1 = _op(spec, th1, Outer.DIRICHLET0)
        op2 = _op(spec, th2, Outer.DIRICHLET0)
        grid = op1.grid
        nodes_max = max(nodes_max, grid.size)
        n = grid.size
        free = op1.free
        t = float(rng.uniform(0.05, 1.0))
        sched = TimeSchedule((t,), min(0.01, t), 1.2)

        def S(op, u):
            return evolve(op, u, sched, tol=1e-13, flux_warning=False).final

        u0 = rng.normal(size=n)
        v0 = u0 + rng.uniform(0, 1, size=n)
        for u in (u0, v0):
            u[op1.fixed] = 0.0
        check("order", lambda: (S(op1, u0) - S(op1, v0) - slack).max())
        check("abs", lambda: (np.abs(S(op1, u0)) - S(op1, np.abs(u0)) - slack).max())

        f, g = rng.normal(size=n), rng.normal(size=n)
        f[op1.fixed] = g[op1.fixed] = 0.0

        def duality():
            lhs, rhs = op1.inner(f, S(op1, g)), op1.inner(g, S(op1, f))
            return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300) - 1e-8

        check("duality", duality)

        def theta_profile():
            p1 = solve_truncated_profile(spec, th1.with_outer(Outer.FIXED_VALUE)).phi
            p2 = solve_truncated_profile(spec, th2.with_outer(Outer.FIXED_VALUE)).phi
            return (p1 - p2 - slack).max()

        check("theta_profile", theta_profile)
        w0 = np.abs(u0)
        check("theta_heat", lambda: (S(op1, w0) - S(op2, w0) - slack).max())
        src = int(rng.choice(free))

        def theta_kernel():
            k1 = kernel_column(op1, src, t)
            k2 = kernel_column(op2, src, t)
            return (k1 - k2 - 1e-10 * k2.max()).max()

        check("theta_kernel", theta_kernel)

        # nested Dirichlet holes: enlarge the hole by a few cells
        if spec.backend == "radial":
            r2 = spec.hole.radius + spec.spacing * int(rng.integers(1, 6))
            big = DomainSpec(spec.dimension, BallHole(r2), spec.truncation_radius, spec.spacing)
        else:
            big = DomainSpec(2, spec.hole.union(MaskHole.ball(spec.hole.extent() + 0.4)), spec.truncation_radius, spec.spacing)

        def domain():
            small_p = solve_truncated_profile(spec, ThetaSpec.constant(0.0, Outer.FIXED_VALUE))
            big_p = solve_truncated_profile(big, ThetaSpec.constant(0.0, Outer.FIXED_VALUE))
            ia, ib = shared_nodes(small_p.grid, big_p.grid)
            profile_excess = (big_p.phi[ib] - small_p.phi[ia] - slack).max()
            op_small = _op(spec, 0.0, Outer.DIRICHLET0)
            op_big = _op(big, 0.0, Outer.DIRICHLET0)
            w_small = np.abs(u0)
            w_small[op_small.fixed] = 0.0
            w_big = np.zeros(op_big.size)
            w_big[ib] = w_small[ia]
            w_big[op_big.fixed] = 0.0
            heat_excess = (S(op_big, w_big)[ib] - S(op_small, w_small)[ia] - slack).max()
            return max(profile_excess, heat_excess)

        check("domain", domain)

    detail = {"cases": cases, "max_nodes": nodes_max, "violations": counts, "worst_excess": worst}
    if errors:
        detail["errors"] = errors
    return cases >= 50 and nodes_max <= 10_000 and not any(counts.values()), detail


def bessel_j0(x: float) -> float:
    """J0 from its power series (adequate for x < 10)."""
    term, total, k = 1.0, 1.0, 0
    while abs(term) > 1e-18 * abs(total):
        k += 1
        term *= -(x * x) / (4.0 * k * k)
        total += term
    return total


def eigen_oracles():
    j0 = brentq(bessel_j0, 2.0, 3.0, xtol=1e-15)
    refs = {1: math.pi**2 / 4, 2: j0**2, 3: math.pi**2}
    detail = {}
    ok = True
    for N, ref in refs.items():
        lam = dirichlet_ball_eigenpair(N, 1000).eigenvalue
        rel = abs(lam - ref) / ref
        detail[f"N={N}"] = {"lambda": lam, "reference": ref, "rel_err": rel}
        ok &= rel <= 1e-3
    return ok, detail


ACCEPTANCE = [
    ("1_closed_form_profile", closed_form_match),
    ("2_limit_profile_constant", limit_profile_constant),
    ("3_dimension_dichotomy", dimension_dichotomy),
    ("4_neumann_conservation", neumann_conservation),
    ("5_profiles_coincide", profiles_coincide),
    ("6_asymptotic_mass", asymptotic_mass_formula),
    ("7_decay_rate", decay_rate),
    ("8_slow_decay", slow_decay),
    ("9_property_suite", property_suite),
    ("10_eigen_oracles", eigen_oracles),
]


# --------------------------------------------------------------------- quick


def _quick_robin():
    vals = [robin_coefficient(1.0), robin_coefficient(0.5), robin_coefficient(0.0)]
    return vals[0] == 0.0 and abs(vals[1] - 1) < 1e-15 and math.isinf(vals[2]), {"values": vals}


def _quick_grid():
    g = build_grid(DomainSpec(3, BallHole(1.0), 2.0, 0.5))
    expected = np.array([math.pi, 4.5 * math.pi, 4 * math.pi])
    return np.allclose(g.weights, expected, rtol=1e-14), {"weights": g.weights.tolist()}


def _quick_neumann_kernel():
    op = _op(DomainSpec(1, BallHole(1.0), 3.0, 1.0), 1.0, Outer.NEUMANN0)
    sums = np.asarray(op.stiffness.sum(axis=1)).ravel()
    return np.all(np.abs(sums) < 1e-14), {"row_sums": sums.tolist()}


def _quick_quadratic():
    op = _op(DomainSpec(1, BallHole(1.0), 3.0, 0.25), 0.0, Outer.DIRICHLET0)
    u, rep = solve_spd(op, np.ones(op.size))
    s = op.grid.radius
    err = float(np.abs(u - (s - 1) * (3 - s) / 2).max())
    return err < 1e-9, {"max_err": err}


def _quick_closed_forms():
    vals = [
        closed_form_profile(3, 1.0, 0.0, 1.5, 2.0),
        closed_form_profile(3, 1.0, 0.5, 2.0),
        closed_form_profile(1, 1.0, 0.0, 2.0, 3.0),
    ]
    ok = np.allclose(vals, [2 / 3, 0.75, 0.5], rtol=1e-14)
    return ok, {"values": vals}


def _quick_fit():
    t = np.geomspace(1, 100, 20)
    fit = fit_decay_exponent(MassTrace(t, 5 + t**-0.5), 5.0, (1, 100))
    return abs(fit.exponent + 0.5) < 1e-6 and abs(fit.amplitude - 1) < 1e-6, asdict(fit)


def _quick_levels():
    t1 = level_time(power_target(0.25), 2.0**-3)
    t2 = level_time(inverse_target(), 2.0**-3)
    return abs(t1 - 4095) < 1e-6 * 4095 and abs(t2 - 8) < 1e-8, {"t_power": t1, "t_inverse": t2}


def _quick_eigen():
    lam = dirichlet_ball_eigenpair(1, 200).eigenvalue
    return abs(lam - math.pi**2 / 4) / (math.pi**2 / 4) < 1e-3, {"lambda": lam}


def _quick_step_constant():
    op = _op(DomainSpec(2, MaskHole.box(0.5), 2.0, 0.25), 1.0, Outer.NEUMANN0)
    u = Stepper(op).step(np.full(op.size, 3.0), 0.5)
    return bool(np.all(u == 3.0)), {"max_dev": float(np.abs(u - 3.0).max())}


QUICK = [
    ("robin_coefficient", _quick_robin),
    ("radial_weights", _quick_grid),
    ("neumann_row_sums", _quick_neumann_kernel),
    ("quadratic_exactness", _quick_quadratic),
    ("closed_forms", _quick_closed_forms),
    ("synthetic_fit", _quick_fit),
    ("level_times", _quick_levels),
    ("eigen_N1", _quick_eigen),
    ("neumann_step_constant", _quick_step_constant),
]


def verify_suite(level: str = "quick", only=None) -> dict:
    """Run the quick or full suite; ``only`` restricts to names containing a substring."""
    if level not in ("quick", "full"):
        raise ValueError(f"level must be 'quick' or 'full', got {level!r}")
    checks = QUICK if level == "quick" else ACCEPTANCE
    if only:
        checks = [(n, f) for n, f in checks if any(o in n for o in np.atleast_1d(only))]
    results = [_run(name, fn) for name, fn in checks]
    return {
        "level": level,
        "passed": all(r.passed for r in results),
        "checks": [
            {"name": r.name, "passed": r.passed, "seconds": r.seconds, "detail": r.detail} for r in results
        ],
        "results": results,
    }
