"""Initial data whose mass decays slower than a prescribed target (N <= 2).

The datum is a sum of rescaled ball eigenfunctions
``2^-n R_n^-N psi((x - x_n) / R_n)`` placed in disjoint balls along the
first axis. Each bump keeps at least half its mass ``2^-n`` up to time
``t_n`` as long as ``exp(-lambda t_n / R_n^2) >= 1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .boundary import Outer, ThetaSpec, classify_boundary
from .eigen import Eigenpair, dirichlet_ball_eigenpair
from .errors import InvalidSpec, NoRoom
from .geometry import BallHole, DomainSpec, MaskHole, build_grid
from .heat import TimeSchedule, evolve
from .operator import assemble_operator


@dataclass(frozen=True)
class Target:
    """Monotonically decreasing continuous ``g`` with ``g -> 0`` and ``g <= 1``."""

    func: Callable[[float], float]
    name: str
    params: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.func(t)

    def describe(self):
        return {"type": self.name, **self.params}


def inverse_target(scale: float = 1.0) -> Target:
    return Target(lambda t: min(1.0, scale / t) if t > 0 else 1.0, "inverse", {"scale": scale})


def power_target(exponent: float = 0.25) -> Target:
    return Target(lambda t: (1.0 + t) ** (-exponent), "power", {"exponent": exponent})


def log_target() -> Target:
    return Target(lambda t: 1.0 / (1.0 + math.log1p(t)), "log", {})


TARGETS = {"inverse": inverse_target, "power": power_target, "log": log_target}


def level_time(g: Callable[[float], float], level: float) -> float:
    """Solve ``g(t) = level`` for decreasing ``g`` (relative tolerance 1e-12)."""
    if g(0.0) < level:
        raise ValueError(f"g(0) = {g(0.0)} is already below the level {level}")
    if g(0.0) == level:
        return 0.0
    hi = 1.0
    while g(hi) > level:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError(f"g never reaches {level}")
    return float(brentq(lambda t: g(t) - level, 0.0, hi, xtol=1e-300, rtol=1e-12, maxiter=500))


def hole_extent(spec: DomainSpec) -> float:
    return spec.hole.extent()


@dataclass(eq=False)
class SlowDecayPlan:
    dimension: int
    spacing: float
    target: Target
    eigenpair: Eigenpair
    times: np.ndarray
    radii: np.ndarray
    centers: np.ndarray
    weights: np.ndarray
    hole_extent: float

    @property
    def eigenvalue(self) -> float:
        return self.eigenpair.eigenvalue

    @property
    def count(self) -> int:
        return len(self.times)

    def retention(self) -> np.ndarray:
        """``exp(-lambda t_n / R_n^2)`` per bump."""
        return np.exp(-self.eigenvalue * self.times / self.radii**2)

    def violations(self) -> list:
        out = []
        x, R = self.centers, self.radii
        for n in range(self.count - 1):
            if x[n + 1] - x[n] < R[n] + R[n + 1]:
                out.append(f"balls {n + 1} and {n + 2} overlap")
        for n in range(self.count):
            if x[n] - R[n] <= self.hole_extent:
                out.append(f"ball {n + 1} meets the hole")
            if self.retention()[n] < 0.5:
                out.append(f"bump {n + 1} retains only {self.retention()[n]:.4f} < 1/2")
        if self.weights.sum() > 1.0 + 1e-15:
            out.append("bump weights sum above 1")
        g = self.target
        for n, t in enumerate(self.times, start=1):
            level = 2.0 ** -(n + 2)
            if abs(g(t) - level) > 1e-9 * level:
                out.append(f"g(t_{n}) = {g(t)} differs from {level}")
        return out

    def datum(self, grid, bumps=None) -> np.ndarray:
        """Sample the (partial) initial datum on ``grid``; ``bumps`` are 1-based."""
        bumps = range(1, self.count + 1) if bumps is None else bumps
        N = self.dimension
        u = np.zeros(grid.size)
        for n in bumps:
            c = np.zeros(grid.coords.shape[1])
            c[0] = self.centers[n - 1]
            d = np.linalg.norm(grid.coords - c, axis=1) / self.radii[n - 1]
            u += self.weights[n - 1] * self.radii[n - 1] ** -N * self.eigenpair.psi_at(d)
        return u

    def describe(self) -> dict:
        return {
            "dimension": self.dimension,
            "spacing": self.spacing,
            "target": self.target.describe(),
            "eigenvalue": self.eigenvalue,
            "hole_extent": self.hole_extent,
            "bumps": [
                {
                    "n": n + 1,
                    "t": float(self.times[n]),
                    "g_t": float(self.target(self.times[n])),
                    "R": float(self.radii[n]),
                    "center": float(self.centers[n]),
                    "weight": float(self.weights[n]),
                    "retention": float(self.retention()[n]),
                }
                for n in range(self.count)
            ],
            "weight_sum": float(self.weights.sum()),
            "violations": self.violations(),
        }


def slow_decay_construct(
    dimension: int,
    hole: DomainSpec,
    g: Target,
    count: int,
    max_extent=None,
    eigen_resolution: int = 1000,
) -> SlowDecayPlan:
    if dimension > 2:
        raise InvalidSpec("the slow-decay construction applies to N <= 2")
    h = hole.spacing
    eig = dirichlet_ball_eigenpair(dimension, eigen_resolution)
    lam = eig.eigenvalue
    times, radii, centers = [], [], []
    ext = hole_extent(hole)
    edge = ext
    for n in range(1, count + 1):
        t = level_time(g, 2.0 ** -(n + 2))
        need = math.sqrt(lam * t / math.log(2.0))
        R = round(h * math.ceil(need / h - 1e-9), 12)
        if math.exp(-lam * t / R**2) < 0.5:
            R = round(R + h, 12)
        x = round(h * math.ceil((edge + 2 * h + R) / h - 1e-9), 12)
        times.append(t)
        radii.append(R)
        centers.append(x)
        edge = x + R
    if max_extent is not None and edge > max_extent:
        raise NoRoom(
            f"{count} bumps need an extent of {edge:.6g} beyond the allowed {max_extent}",
            required_extent=edge,
        )
    return SlowDecayPlan(
        dimension=dimension,
        spacing=h,
        target=g,
        eigenpair=eig,
        times=np.array(times),
        radii=np.array(radii),
        centers=np.array(centers),
        weights=2.0 ** -np.arange(1, count + 1, dtype=float),
        hole_extent=ext,
    )


@dataclass(frozen=True)
class BumpCheck:
    n: int
    time: float
    initial_mass: float
    mass: float
    bound: float
    slack: float
    nodes: int

    @property
    def passed(self) -> bool:
        return self.mass >= (1 - self.slack) * self.bound


def simulate_bump(
    plan: SlowDecayPlan,
    n: int,
    hole: DomainSpec,
    theta: ThetaSpec | None = None,
    margin: float = 4.0,
    growth: float = 1.05,
    tol: float = 1e-10,
    slack: float = 0.05,
) -> BumpCheck:
    """Evolve bump ``n`` alone in the exterior domain up to ``t_n``.

    The outer boundary is absorbing (Dirichlet 0), which can only lower
    the mass, so the check stays conservative.
    """
    theta = (theta or ThetaSpec.constant(0.0)).with_outer(Outer.DIRICHLET0)
    N, h = plan.dimension, plan.spacing
    t_n, R_n, x_n = plan.times[n - 1], plan.radii[n - 1], plan.centers[n - 1]
    reach = x_n + R_n + margin * math.sqrt(t_n)
    if N == 1:
        r = hole.hole.radius if isinstance(hole.hole, BallHole) else hole.hole.extent()
        R = r + h * math.ceil((reach - r) / h)
        spec = DomainSpec(1, BallHole(r), R, h)
    else:
        mask = hole.hole
        if isinstance(mask, BallHole):
            mask = MaskHole.ball(mask.radius, dimension=N)
        spec = DomainSpec(N, mask, h * math.ceil(reach / h), h)
    grid = build_grid(spec)
    op = assemble_operator(grid, classify_boundary(grid, theta))
    u0 = plan.datum(grid, bumps=[n])
    result = evolve(op, u0, TimeSchedule((t_n,), h * h, growth), tol=tol)
    return BumpCheck(
        n=n,
        time=float(t_n),
        initial_mass=result.initial_mass,
        mass=float(result.mass_trace.masses[-1]),
        bound=2.0 ** -(n + 1),
        slack=slack,
        nodes=grid.size,
    )
