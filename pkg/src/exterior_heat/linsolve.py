"""Jacobi-preconditioned conjugate gradients for the symmetric systems.

Residuals are measured in the weighted norm of the operator's inner
product: for ``M u = b`` with ``M = W (shift + A)``, the weighted residual
is ``W^-1 (b - M u)`` and its norm is ``sqrt(sum (b - M u)^2 / w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch, NotConverged, SingularSystem


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    history: tuple = field(default=(), repr=False)


def default_max_iter(n: int) -> int:
    # 50*sqrt(n) is too small for long 1-D radial lines, where CG needs ~n steps
    return int(max(50 * math.sqrt(n), 2 * n, 10))


def pcg(matrix, rhs, weights=None, tol=1e-10, max_iter=None, x0=None, preconditioner="jacobi"):
    """Solve ``matrix @ x = rhs`` for symmetric positive definite ``matrix``.

    Returns ``(x, report)``. Raises :class:`NotConverged` carrying the best
    iterate when the weighted relative residual does not drop below ``tol``.
    The reported residual history is the running minimum, and the returned
    iterate is the one attaining it.
    """
    A = sp.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    n = len(b)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if max_iter is None:
        max_iter = default_max_iter(n)

    def wnorm(r):
        return math.sqrt(float(np.dot(r, r / w)))

    bnorm = wnorm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0 and x0 is None:
        return x, SolveReport(0, 0.0, True, (0.0,))
    scale = bnorm if bnorm > 0 else 1.0

    diag = A.diagonal()
    if preconditioner == "jacobi":
        inv_diag = 1.0 / diag
        precond = lambda r: inv_diag * r  # noqa: E731
    elif preconditioner == "sgs":
        precond = _sgs(A)
    elif preconditioner is None:
        precond = lambda r: r  # noqa: E731
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")

    r = b - A @ x
    res = wnorm(r) / scale
    best_x, best = x.copy(), res
    history = [res]
    k = 0
    if res > tol:
        z = precond(r)
        p = z.copy()
        rz = float(np.dot(r, z))
        while k < max_iter:
            Ap = A @ p
            pAp = float(np.dot(p, Ap))
            if pAp <= 0:
                raise SingularSystem("matrix is not positive definite along a search direction")
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            k += 1
            res = wnorm(r) / scale
            if res < best:
                best, best_x = res, x.copy()
            history.append(best)
            if res <= tol:
                break
            z = precond(r)
            rz_new = float(np.dot(r, z))
            p = z + (rz_new / rz) * p
            rz = rz_new
    report = SolveReport(k, best, best <= tol, tuple(history))
    if not report.converged:
        raise NotConverged(
            f"CG stopped after {k} iterations at relative residual {best:.3e} > {tol:.1e}",
            solution=best_x,
            report=report,
        )
    return best_x, report


def _sgs(A):
    from scipy.sparse.linalg import spsolve_triangular

    L = sp.tril(A, format="csr")
    U = sp.triu(A, format="csr")
    d = A.diagonal()

    def apply(r):
        y = spsolve_triangular(L, r, lower=True)
        return spsolve_triangular(U, d * y, lower=False)

    return apply


def solve_spd(op, rhs, tol=1e-10, max_iter=None, x0=None, preconditioner="jacobi"):
    """Solve ``(A + gamma) u = rhs`` with the operator's Dirichlet values imposed.

    ``rhs`` is a nodal field; its values on fixed nodes are ignored. The
    returned field holds the prescribed values on fixed nodes.
    """
    f = np.asarray(rhs, dtype=float)
    if f.shape != (op.size,):
        raise GridMismatch(f"rhs of shape {f.shape} does not match {op.size} grid nodes")
    if not op.has_absorption():
        raise SingularSystem(
            "pure Neumann problem with gamma = 0 and no Dirichlet outer face is singular"
        )
    free, fixed = op.free, op.dirichlet
    M, C = op.blocks(0.0, 1.0)
    w = op.weights[free]
    b = w * f[free] - C @ op.fixed_values[fixed]
    guess = None if x0 is None else np.asarray(x0, dtype=float)[free]
    u = op.fixed_values.copy()
    try:
        xf, report = pcg(M, b, w, tol, max_iter, guess, preconditioner)
    except NotConverged as exc:
        u[free] = exc.solution
        raise NotConverged(str(exc), solution=u, report=exc.report) from None
    u[free] = xf
    return u, report
