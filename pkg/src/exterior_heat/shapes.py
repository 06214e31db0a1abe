"""Named initial-data constructors used by configs and tests."""

from __future__ import annotations

import numpy as np

from .eigen import dirichlet_ball_eigenpair
from .errors import ConfigParse, InvalidSpec


def _center(grid, center):
    c = np.zeros(grid.coords.shape[1])
    if center is not None:
        c[: len(np.atleast_1d(center))] = np.atleast_1d(center)
    return c


def indicator_annulus(grid, r_in: float, r_out: float) -> np.ndarray:
    """1 on ``r_in < |x| < r_out``; nodes exactly on either sphere get 1/2."""
    s = grid.radius
    tol = 1e-9 * max(1.0, r_out)
    u = ((s > r_in + tol) & (s < r_out - tol)).astype(float)
    u[(np.abs(s - r_in) <= tol) | (np.abs(s - r_out) <= tol)] = 0.5
    return u


def gaussian_bump(grid, center=None, width: float = 1.0, amplitude: float = 1.0, cutoff: float = 4.0):
    """Truncated Gaussian ``amplitude * exp(-|x-c|^2 / width^2)`` (zero beyond ``cutoff*width``)."""
    if grid.kind == "radial":
        d = np.abs(grid.radius - float(np.atleast_1d(center if center is not None else 0.0)[0]))
    else:
        d = np.linalg.norm(grid.coords - _center(grid, center), axis=1)
    return np.where(d <= cutoff * width, amplitude * np.exp(-((d / width) ** 2)), 0.0)


def eigen_bump(grid, center=None, radius: float = 1.0, total_mass: float = 1.0, resolution: int = 400):
    """``total_mass * radius^-N psi((x - c)/radius)`` with psi the unit-mass ball eigenfunction."""
    N = grid.dimension
    if N > 3:
        raise InvalidSpec("eigen bumps are available for N <= 3")
    eig = dirichlet_ball_eigenpair(N, resolution)
    if grid.kind == "radial":
        d = np.abs(grid.radius - float(np.atleast_1d(center if center is not None else 0.0)[0]))
    else:
        d = np.linalg.norm(grid.coords - _center(grid, center), axis=1)
    return total_mass * radius**-N * eig.psi_at(d / radius)


def delta(grid, point=None, node=None) -> np.ndarray:
    """Discrete delta ``e_i / w_i`` at ``node`` or at the node nearest ``point``."""
    i = grid.nearest_node(point) if node is None else int(node)
    u = np.zeros(grid.size)
    u[i] = 1.0 / grid.weights[i]
    return u


SHAPES = {
    "indicator-annulus": indicator_annulus,
    "gaussian-bump": gaussian_bump,
    "eigen-bump": eigen_bump,
    "delta": delta,
}


def build_initial(grid, description: dict) -> np.ndarray:
    desc = dict(description)
    name = desc.pop("shape", None)
    if name not in SHAPES:
        raise ConfigParse(f"u0.shape must be one of {sorted(SHAPES)}, got {name!r}")
    try:
        return SHAPES[name](grid, **desc)
    except TypeError as exc:
        raise ConfigParse(f"bad parameters for u0 shape {name!r}: {exc}") from None
