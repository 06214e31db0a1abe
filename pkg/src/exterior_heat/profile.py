"""Elliptic construction of the asymptotic profile.

The truncated profile ``phi_R`` is harmonic in ``Omega ∩ B(0, R)``,
satisfies the theta condition on the hole boundary and equals 1 on
``|x| = R``. It is nonincreasing in ``R`` and its limit is the profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import Outer, ThetaSpec, classify_boundary
from .errors import InconsistentInputs, MonotonicityViolation, OutOfDomain, OutOfRange
from .geometry import DomainSpec, Grid, build_grid, shared_nodes
from .linsolve import SolveReport, solve_spd
from .operator import DiscreteOperator, assemble_operator


def profile_constant(dimension: int, theta: float, r: float = 1.0) -> float:
    """Constant ``C`` in the limit profile ``1 - r^(N-2) / (C |x|^(N-2))``.

    ``C = 1 + (N-2) tan(pi*theta/2) / r`` for N >= 3, which is
    ``1 + (N-2) tan(pi*theta/2)`` for the unit hole. For N <= 2 the unit-hole
    value ``1 + tan(pi*theta/2)`` is returned; the closed forms below do not
    use it.
    """
    if not 0.0 <= theta < 1.0:
        raise OutOfRange(f"profile constant needs 0 <= theta < 1, got {theta}")
    t = math.tan(0.5 * math.pi * theta)
    if dimension >= 3:
        return 1.0 + (dimension - 2) * t / r
    return 1.0 + t


def _fundamental(dimension, s):
    """Radial harmonic G with G'(s) = s^(1-N)."""
    if dimension == 1:
        return s
    if dimension == 2:
        return np.log(s)
    return s ** (2 - dimension) / (2 - dimension)


def closed_form_profile(dimension, r, theta, x_norm, R=None):
    """Exact radial profile for a ball hole of radius ``r`` and constant theta.

    With ``R`` given, solves the truncated annulus problem (1 at ``|x| = R``);
    without it, returns the limit ``R -> inf``. Vectorized over ``x_norm``.
    """
    if not 0.0 <= theta <= 1.0:
        raise OutOfRange(f"theta must lie in [0, 1], got {theta}")
    s = np.asarray(x_norm, dtype=float)
    upper = np.inf if R is None else R
    if np.any(s < r * (1 - 1e-12)) or np.any(s > upper * (1 + 1e-12)):
        raise OutOfDomain(f"|x| must lie in [{r}, {upper}]")
    if theta == 1.0:
        out = np.ones_like(s)
    elif R is None:
        if dimension <= 2:
            out = np.zeros_like(s)
        else:
            C = profile_constant(dimension, theta, r)
            out = 1.0 - (r / s) ** (dimension - 2) / C
    else:
        t = math.tan(0.5 * math.pi * theta)
        base = _fundamental(dimension, r) - t * r ** (1 - dimension)
        out = (_fundamental(dimension, s) - base) / (_fundamental(dimension, R) - base)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class TruncatedProfile:
    grid: Grid
    operator: DiscreteOperator
    phi: np.ndarray
    report: SolveReport

    @property
    def radius(self) -> float:
        return self.grid.spec.truncation_radius


def profile_operator(spec: DomainSpec, theta: ThetaSpec, gamma: float = 0.0) -> DiscreteOperator:
    grid = build_grid(spec)
    return assemble_operator(grid, classify_boundary(grid, theta), gamma)


def solve_truncated_profile(
    spec: DomainSpec, theta: ThetaSpec, tol: float = 1e-12, max_iter=None
) -> TruncatedProfile:
    if theta.outer is not Outer.FIXED_VALUE:
        raise InconsistentInputs("truncated profiles need the fixed-value outer condition")
    op = profile_operator(spec, theta)
    # start from the supersolution 1: exact immediately under pure Neumann
    guess = np.ones(op.size)
    phi, report = solve_spd(op, np.zeros(op.size), tol=tol, max_iter=max_iter, x0=guess)
    return TruncatedProfile(op.grid, op, phi, report)


@dataclass(frozen=True)
class LadderStep:
    radius: float
    sup_difference: float  # against the previous rung, on the window; nan for the first
    iterations: int
    residual: float


@dataclass(eq=False)
class ProfileResult:
    phi: np.ndarray
    grid: Grid
    operator: DiscreteOperator
    ladder: list
    converged: bool
    window: float
    theta: dict
    domain: dict
    history: list = field(default_factory=list, repr=False)

    def value_at(self, point) -> float:
        return float(self.phi[self.grid.nearest_node(point)])

    def ladder_values(self, point) -> np.ndarray:
        """phi_R at the node nearest ``point`` for every rung of the ladder."""
        return np.array([p.phi[p.grid.nearest_node(point)] for p in self.history])

    def window_mask(self) -> np.ndarray:
        return self.grid.radius <= self.window * (1 + 1e-12)

    def report(self) -> dict:
        return {
            "converged": self.converged,
            "window": self.window,
            "theta": self.theta,
            "domain": self.domain,
            "ladder": [
                {
                    "R": s.radius,
                    "sup_difference": None if math.isnan(s.sup_difference) else s.sup_difference,
                    "iterations": s.iterations,
                    "residual": s.residual,
                }
                for s in self.ladder
            ],
        }


def default_ladder(r0: float, levels: int = 4) -> list:
    return [r0 * 2**k for k in range(levels)]


def compute_profile(
    spec: DomainSpec,
    theta: ThetaSpec,
    ladder=None,
    window=None,
    window_tol: float = 1e-3,
    tol: float = 1e-12,
    max_iter=None,
) -> ProfileResult:
    """Drive ``R`` up the ladder and certify monotone convergence on a window.

    ``converged`` is true iff the last sup-difference on the window is
    below ``window_tol``. A non-converged ladder is reported, not raised.
    """
    if theta.outer is not Outer.FIXED_VALUE:
        theta = theta.with_outer(Outer.FIXED_VALUE)
    ladder = list(ladder) if ladder is not None else default_ladder(spec.truncation_radius)
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise InconsistentInputs("ladder radii must be strictly increasing")
    window = ladder[0] / 2 if window is None else float(window)
    if window >= ladder[0]:
        raise InconsistentInputs(f"window {window} must lie inside the smallest radius {ladder[0]}")

    steps, history = [], []
    prev = None
    for R in ladder:
        cur = solve_truncated_profile(spec.with_radius(R), theta, tol=tol, max_iter=max_iter)
        sup = math.nan
        if prev is not None:
            ia, ib = shared_nodes(prev.grid, cur.grid)
            inside = prev.grid.radius[ia] <= window * (1 + 1e-12)
            diff = cur.phi[ib[inside]] - prev.phi[ia[inside]]
            rise = float(diff.max(initial=0.0))
            if rise > 10 * tol:
                raise MonotonicityViolation(
                    f"phi_R increased by {rise:.3e} on the window between R={prev.radius} and R={R}"
                )
            sup = float(np.abs(diff).max(initial=0.0))
        steps.append(LadderStep(R, sup, cur.report.iterations, cur.report.residual))
        history.append(cur)
        prev = cur

    last = history[-1]
    converged = len(steps) > 1 and steps[-1].sup_difference < window_tol
    return ProfileResult(
        phi=last.phi,
        grid=last.grid,
        operator=last.operator,
        ladder=steps,
        converged=converged,
        window=window,
        theta=theta.describe(),
        domain=spec.describe(),
        history=history,
    )
