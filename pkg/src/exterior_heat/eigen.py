"""First Dirichlet eigenpair of the Laplacian in the unit ball (radial mode)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidSpec, NotConverged
from .geometry import sphere_area
from .linsolve import pcg


@dataclass(frozen=True, eq=False)
class Eigenpair:
    eigenvalue: float
    radii: np.ndarray
    psi: np.ndarray  # nonnegative, unit L1 mass over the ball
    weights: np.ndarray
    iterations: int

    def psi_at(self, s):
        """Eigenfunction at radius ``s``; zero outside the unit ball."""
        s = np.asarray(s, dtype=float)
        return np.where(s <= 1.0, np.interp(s, self.radii, self.psi), 0.0)


def dirichlet_ball_eigenpair(dimension: int, resolution: int = 1000, tol: float = 1e-13, max_iter: int = 200):
    """Inverse power iteration on ``-(s^(N-1) psi')' / s^(N-1)`` over [0, 1].

    Vertex-centred finite volumes with ``psi(1) = 0`` and the symmetry
    condition ``psi'(0) = 0``. For N = 1 the ball is (-1, 1) and only the
    even half is discretized.
    """
    if dimension not in (1, 2, 3):
        raise InvalidSpec(f"eigenpair is implemented for N in {{1, 2, 3}}, got {dimension}")
    N, M = dimension, int(resolution)
    h = 1.0 / M
    omega = 2.0 if N == 1 else sphere_area(N)
    s = np.arange(M + 1) * h
    lo = np.clip(s - h / 2, 0.0, 1.0)
    hi = np.clip(s + h / 2, 0.0, 1.0)
    w = omega / N * (hi**N - lo**N)
    cond = omega * (s[:-1] + h / 2) ** (N - 1) / h

    n = M  # node M carries the Dirichlet value
    diag = np.zeros(n)
    diag += cond[:n]
    diag[1:] += cond[: n - 1]
    K = sp.diags([diag, -cond[: n - 1], -cond[: n - 1]], [0, 1, -1], format="csr")
    wf = w[:n]

    u = np.ones(n)
    lam_old = math.inf
    for it in range(1, max_iter + 1):
        u, _ = pcg(K, wf * u, wf, tol=tol, max_iter=4 * n, x0=u / lam_old if it > 1 else None)
        u /= math.sqrt(np.dot(wf, u * u))
        lam = float(u @ (K @ u))
        if abs(lam - lam_old) <= tol * 10 * lam:
            break
        lam_old = lam
    else:
        raise NotConverged(f"inverse iteration did not settle after {max_iter} sweeps")
    psi = np.zeros(M + 1)
    psi[:n] = np.abs(u)
    psi /= np.dot(w, psi)
    return Eigenpair(lam, s, psi, w, it)
