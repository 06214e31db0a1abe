"""Mass bookkeeping: traces, the asymptotic mass and decay-rate fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateWindow, GridMismatch, SupportOutsideWindow


@dataclass(eq=False)
class MassTrace:
    times: np.ndarray
    masses: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def is_nonincreasing(self, slack: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.masses) <= slack))

    def rows(self, m_inf=None):
        """(t, m, m_inf, residual) rows; residual is ``m - m_inf``."""
        for t, m in zip(self.times, self.masses):
            if m_inf is None:
                yield t, m, float("nan"), float("nan")
            else:
                yield t, m, m_inf, m - m_inf


def mass(grid, f) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.size,):
        raise GridMismatch(f"field of shape {f.shape} does not match {grid.size} grid nodes")
    return float(np.dot(grid.weights, f))


def asymptotic_mass(u0, profile) -> float:
    """<u0, Phi_h>_h for a :class:`~exterior_heat.profile.ProfileResult`.

    ``u0`` lives on the profile's (largest-R) grid and must vanish outside
    the profile's trusted window.
    """
    grid = profile.grid
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.size,):
        raise GridMismatch(f"u0 of shape {u0.shape} does not match {grid.size} grid nodes")
    outside = ~profile.window_mask() & (u0 != 0)
    if outside.any():
        raise SupportOutsideWindow(
            f"u0 is nonzero at |x| = {grid.radius[outside].max():.6g} beyond the window {profile.window}"
        )
    return float(np.dot(grid.weights, u0 * profile.phi))


def conserved_functional(evolution, phi) -> list:
    """Series ``(t, <u(t), Phi_h>_h)`` over the snapshots of an evolution."""
    phi = getattr(phi, "phi", phi)
    w = evolution.grid.weights
    phi = np.asarray(phi, dtype=float)
    if phi.shape != w.shape:
        raise GridMismatch("profile and evolution live on different grids")
    return [(t, float(np.dot(w, u * phi))) for t, u in evolution.snapshots]


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    amplitude: float
    r_squared: float
    points: int


def fit_decay_exponent(trace: MassTrace, m_inf: float, window) -> DecayFit:
    """Least-squares fit of ``log(m(t) - m_inf)`` against ``log t`` on ``window``."""
    lo, hi = window
    sel = (trace.times >= lo) & (trace.times <= hi)
    if sel.sum() < 8:
        raise DegenerateWindow(f"window [{lo}, {hi}] holds {sel.sum()} trace points, need 8")
    gap = trace.masses[sel] - m_inf
    if np.any(gap <= 0):
        raise DegenerateWindow("m(t) - m_inf must be positive on the whole window")
    fit = stats.linregress(np.log(trace.times[sel]), np.log(gap))
    return DecayFit(float(fit.slope), float(np.exp(fit.intercept)), float(fit.rvalue**2), int(sel.sum()))
