"""Finite-volume assembly of -Laplacian with theta boundary conditions.

The operator is stored as a symmetric stiffness matrix ``K`` together with
the lumped mass ``W = diag(weights)``; the discrete Laplacian in the
weighted inner product ``<f, g>_h = sum w_i f_i g_i`` is ``A = W^-1 K``.
Nodes carrying a Dirichlet value (hole nodes under theta = 0 on radial
grids, outer nodes under fixed-value or zero outer conditions) are
eliminated: they keep their prescribed value and only enter the free
equations through the coupling block ``K_fd``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .boundary import BoundaryData, FaceClass, Outer
from .errors import GridMismatch, InconsistentInputs
from .geometry import Grid


B_MAX = 1e100


def boundary_conductance(b, area, offset):
    """Flux coefficient of a boundary face: ``b*area / (1 + b*offset)``.

    This is the ghost-node Robin closure with the boundary at distance
    ``offset`` from the node. It reduces to ``b*area`` for faces through
    the node and tends to the Dirichlet ghost value ``area/offset`` as
    ``b -> inf``, so it is nonincreasing in theta.
    """
    # beyond B_MAX a Robin face is Dirichlet to double precision; capping
    # keeps b*area finite for theta near 0 without breaking monotonicity
    b = np.asarray(b, dtype=float)
    inf = np.isinf(b)
    b = np.where(inf, b, np.minimum(b, B_MAX))
    area = np.asarray(area, dtype=float)
    offset = np.asarray(offset, dtype=float)
    out = np.empty(np.broadcast(b, area, offset).shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        finite = b * area / (1.0 + b * offset)
        dirichlet = area / offset
    out[...] = np.where(inf, dirichlet, finite)
    return out


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    grid: Grid
    boundary: BoundaryData
    gamma: float
    stiffness: sp.csr_matrix
    fixed: np.ndarray
    fixed_values: np.ndarray
    face_terms: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed)

    @property
    def dirichlet(self) -> np.ndarray:
        return np.flatnonzero(self.fixed)

    def has_absorption(self) -> bool:
        return bool(self.fixed.any() or (self.face_terms > 0).any() or self.gamma > 0)

    def _check(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.size,):
            raise GridMismatch(f"field of shape {f.shape} does not match {self.size} grid nodes")
        return f

    def apply(self, f) -> np.ndarray:
        """(A + gamma) f on free nodes; fixed nodes return 0."""
        f = self._check(f)
        out = self.stiffness @ f / self.weights + self.gamma * f
        out[self.fixed] = 0.0
        return out

    def blocks(self, mass_coef: float, stiff_coef: float):
        """Free-node system ``mass_coef*W + stiff_coef*(K + gamma W)`` and coupling.

        Returns ``(M_ff, C_fd)`` where ``C_fd = stiff_coef * K_fd``.
        """
        free, fixed = self.free, self.dirichlet
        K = self.stiffness
        w = self.weights[free]
        M = stiff_coef * K[free][:, free] + sp.diags((mass_coef + stiff_coef * self.gamma) * w)
        C = stiff_coef * K[free][:, fixed]
        return M.tocsr(), C.tocsr()

    def inner(self, f, g) -> float:
        return float(np.sum(self.weights * self._check(f) * self._check(g)))

    def is_m_matrix(self, tol: float = 1e-12) -> bool:
        free = self.free
        K = self.stiffness[free][:, free].tocoo()
        off = K.row != K.col
        if np.any(K.data[off] > tol):
            return False
        diag = K.diagonal()
        if np.any(diag <= 0):
            return False
        offsum = np.asarray(np.abs(self.stiffness[free]).sum(axis=1)).ravel() - diag
        return bool(np.all(diag + tol * np.abs(diag) >= offsum))

    def dump_coo(self, path) -> Path:
        """Write the stiffness matrix as ``row col value`` lines."""
        path = Path(path)
        K = self.stiffness.tocoo()
        with path.open("w") as fh:
            fh.write("# row col value\n")
            for i, j, v in zip(K.row, K.col, K.data):
                fh.write(f"{i} {j} {v:.17g}\n")
        return path


def assemble_operator(grid: Grid, bc: BoundaryData, gamma: float = 0.0) -> DiscreteOperator:
    if len(bc) != len(grid.hole_faces):
        raise InconsistentInputs(
            f"boundary data has {len(bc)} faces, grid has {len(grid.hole_faces)}"
        )
    if gamma < 0:
        raise InconsistentInputs(f"gamma must be >= 0, got {gamma}")
    n = grid.size
    i, j, c = grid.links
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-c, -c, c, c])

    faces = grid.hole_faces
    fixed = np.zeros(n, dtype=bool)
    fixed_values = np.zeros(n)

    through_node = faces.offset == 0
    dirichlet_on_node = through_node & (bc.cls == FaceClass.D)
    fixed[faces.node[dirichlet_on_node]] = True

    terms = np.zeros(len(faces))
    active = ~dirichlet_on_node & (bc.cls != FaceClass.N)
    terms[active] = boundary_conductance(bc.robin[active], faces.area[active], faces.offset[active])
    diag = np.bincount(faces.node, weights=terms, minlength=n)

    if bc.outer is not Outer.NEUMANN0:
        outer_nodes = grid.outer_nodes
        fixed[outer_nodes] = True
        fixed_values[outer_nodes] = bc.outer.value_imposed

    rows = np.concatenate([rows, np.arange(n)])
    cols = np.concatenate([cols, np.arange(n)])
    vals = np.concatenate([vals, diag])
    K = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    K.sum_duplicates()
    return DiscreteOperator(
        grid=grid,
        boundary=bc,
        gamma=float(gamma),
        stiffness=K,
        fixed=fixed,
        fixed_values=fixed_values,
        face_terms=terms,
    )


def apply(op: DiscreteOperator, f) -> np.ndarray:
    return op.apply(f)
