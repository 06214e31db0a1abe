"""The theta-parameterized boundary operator and its per-face classification.

On the hole boundary the condition reads
``sin(pi*theta/2) du/dn + cos(pi*theta/2) u = 0``: theta = 0 is Dirichlet,
theta = 1 is Neumann and anything in between is Robin with coefficient
``cot(pi*theta/2)``.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InconsistentInputs, MissingComponent, MixedDirichlet, OutOfRange
from .geometry import Grid


class FaceClass(enum.IntEnum):
    D = 0
    R = 1
    N = 2


class Outer(enum.Enum):
    FIXED_VALUE = "fixed_value"  # u = 1, used for profile runs
    DIRICHLET0 = "dirichlet0"
    NEUMANN0 = "neumann0"

    @property
    def value_imposed(self):
        return {"fixed_value": 1.0, "dirichlet0": 0.0}.get(self.value)


def robin_coefficient(theta: float) -> float:
    """cot(pi*theta/2); ``math.inf`` at theta=0 and exactly 0 at theta=1."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0 or math.isnan(theta):
        raise OutOfRange(f"theta must lie in [0, 1], got {theta}")
    if theta == 0.0:
        return math.inf
    if theta == 1.0:
        return 0.0
    # cos(a) = sin(pi/2 - a); written this way cot(pi/4) is exactly 1
    num = math.sin(0.5 * math.pi * (1.0 - theta))
    den = math.sin(0.5 * math.pi * theta)
    # subnormal theta: Robin faces must keep a finite coefficient
    return num / den if den > num / sys.float_info.max else sys.float_info.max


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise OutOfRange(f"theta must lie in [0, 1], got {self.value}")

    def __call__(self, points):
        return np.full(len(np.atleast_2d(points)), float(self.value))

    def describe(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Sampled:
    """Theta as a function of boundary position, evaluated at face midpoints."""

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "sampled"
    params: dict = field(default_factory=dict)

    def __call__(self, points):
        return np.asarray(self.func(np.atleast_2d(points)), dtype=float)

    def describe(self):
        return {"type": self.name, **self.params}


def angular_sine(mean: float = 0.5, amplitude: float = 0.4, frequency: int = 1) -> Sampled:
    """theta(x) = mean + amplitude * sin(frequency * angle(x)) in the x1-x2 plane."""

    def f(p):
        return mean + amplitude * np.sin(frequency * np.arctan2(p[:, 1], p[:, 0]))

    return Sampled(f, "angular_sine", {"mean": mean, "amplitude": amplitude, "frequency": frequency})


def angular_cosine(mean: float = 0.5, amplitude: float = 0.4, frequency: int = 1) -> Sampled:
    def f(p):
        return mean + amplitude * np.cos(frequency * np.arctan2(p[:, 1], p[:, 0]))

    return Sampled(f, "angular_cosine", {"mean": mean, "amplitude": amplitude, "frequency": frequency})


THETA_EXPRESSIONS = {
    "angular_sine": angular_sine,
    "angular_cosine": angular_cosine,
}


@dataclass(frozen=True)
class ThetaSpec:
    """Theta per hole-boundary component plus the artificial outer condition."""

    components: dict = field(default_factory=dict)
    default: Constant | Sampled | None = None
    outer: Outer = Outer.DIRICHLET0

    @classmethod
    def constant(cls, theta: float, outer: Outer = Outer.DIRICHLET0) -> "ThetaSpec":
        return cls(default=Constant(float(theta)), outer=outer)

    def with_outer(self, outer: Outer) -> "ThetaSpec":
        return ThetaSpec(dict(self.components), self.default, outer)

    def field_for(self, component: int):
        if component in self.components:
            return self.components[component]
        if self.default is None:
            raise MissingComponent(f"no theta assigned to hole component {component}")
        return self.default

    def is_constant(self) -> bool:
        fields = list(self.components.values()) + ([self.default] if self.default else [])
        return all(isinstance(f, Constant) for f in fields)

    def describe(self) -> dict:
        return {
            "components": {str(k): v.describe() for k, v in self.components.items()},
            "default": None if self.default is None else self.default.describe(),
            "outer": self.outer.value,
        }


@dataclass(frozen=True, eq=False)
class BoundaryData:
    cls: np.ndarray  # FaceClass per hole face
    theta: np.ndarray
    robin: np.ndarray  # cot(pi*theta/2); inf on D faces, 0 on N faces
    outer: Outer

    def __len__(self):
        return len(self.cls)


def classify_boundary(grid: Grid, theta: ThetaSpec) -> BoundaryData:
    faces = grid.hole_faces
    if grid.kind == "radial" and not theta.is_constant():
        raise InconsistentInputs("radial grids require a constant theta")
    values = np.empty(len(faces))
    for comp in range(grid.n_components):
        sel = faces.component == comp
        if not sel.any():
            continue
        f = theta.field_for(comp)
        vals = f(faces.midpoint[sel])
        if np.any((vals < 0) | (vals > 1) | np.isnan(vals)):
            raise OutOfRange(f"theta leaves [0, 1] on component {comp}")
        zero = vals == 0.0
        if zero.any() and not zero.all():
            raise MixedDirichlet(
                f"theta vanishes on part of component {comp} but not on all of it"
            )
        values[sel] = vals
    cls = np.where(values == 0.0, FaceClass.D, np.where(values == 1.0, FaceClass.N, FaceClass.R))
    robin = np.array([robin_coefficient(v) for v in values])
    return BoundaryData(cls=cls.astype(int), theta=values, robin=robin, outer=theta.outer)
