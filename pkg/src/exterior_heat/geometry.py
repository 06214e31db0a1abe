"""Exterior-domain geometry and its discretization.

Two backends are provided:

* ``radial``: a ball hole ``B(0, r)`` and a truncation sphere ``|x| = R``.
  The domain is reduced to the segment ``r <= s <= R`` carrying the
  volume density ``omega_N s^(N-1)``.
* ``cartesian``: a staircase hole described by a mask on the lattice
  ``h Z^N`` (N = 2, 3), truncated to the lattice ball ``|x| <= R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvalidSpec

_ALIGN_TOL = 1e-9
_KEY_SUBDIV = 1024


def sphere_area(dimension: int) -> float:
    """Area of the unit sphere in R^N, with the single-ray convention for N=1."""
    if dimension == 1:
        return 1.0
    return 2.0 * math.pi ** (dimension / 2) / math.gamma(dimension / 2)


@dataclass(frozen=True)
class BallHole:
    radius: float

    def extent(self) -> float:
        return self.radius


@dataclass(frozen=True)
class MaskHole:
    """Union of axis-aligned boxes and balls, sampled on the lattice.

    ``boxes`` holds ``(center, half_widths)`` pairs and ``balls`` holds
    ``(center, radius)`` pairs. A lattice point is masked when it lies in
    the closure of one of the shapes.
    """

    boxes: tuple = ()
    balls: tuple = ()

    @classmethod
    def box(cls, half_width, center=None, dimension=2):
        hw = np.broadcast_to(np.asarray(half_width, dtype=float), (dimension,))
        c = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
        return cls(boxes=((tuple(c), tuple(hw)),))

    @classmethod
    def ball(cls, radius, center=None, dimension=2):
        c = np.zeros(dimension) if center is None else np.asarray(center, dtype=float)
        return cls(balls=((tuple(c), float(radius)),))

    def union(self, other: "MaskHole") -> "MaskHole":
        return MaskHole(self.boxes + other.boxes, self.balls + other.balls)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(len(pts), dtype=bool)
        eps = 1e-12
        for center, hw in self.boxes:
            d = np.abs(pts - np.asarray(center))
            inside |= np.all(d <= np.asarray(hw) + eps, axis=1)
        for center, rad in self.balls:
            d = np.linalg.norm(pts - np.asarray(center), axis=1)
            inside |= d <= rad + eps
        return inside

    def extent(self) -> float:
        """Radius of a ball about the origin enclosing every shape."""
        ext = 0.0
        for center, hw in self.boxes:
            corner = np.abs(np.asarray(center)) + np.asarray(hw)
            ext = max(ext, float(np.linalg.norm(corner)))
        for center, rad in self.balls:
            ext = max(ext, float(np.linalg.norm(center)) + rad)
        return ext


@dataclass(frozen=True)
class DomainSpec:
    dimension: int
    hole: BallHole | MaskHole
    truncation_radius: float
    spacing: float

    @property
    def backend(self) -> str:
        return "radial" if isinstance(self.hole, BallHole) else "cartesian"

    def with_radius(self, radius: float) -> "DomainSpec":
        return DomainSpec(self.dimension, self.hole, radius, self.spacing)

    def describe(self) -> dict:
        if isinstance(self.hole, BallHole):
            hole = {"type": "ball", "radius": self.hole.radius}
        else:
            hole = {
                "type": "mask",
                "boxes": [{"center": list(c), "half_widths": list(w)} for c, w in self.hole.boxes],
                "balls": [{"center": list(c), "radius": r} for c, r in self.hole.balls],
            }
        return {
            "dimension": self.dimension,
            "hole": hole,
            "truncation_radius": self.truncation_radius,
            "spacing": self.spacing,
        }


@dataclass(frozen=True, eq=False)
class FaceSet:
    """Boundary faces attached to grid nodes.

    ``offset`` is the distance from the node to the boundary along the
    normal; zero when the boundary passes through the node itself.
    ``normal`` points out of the computational domain.
    """

    node: np.ndarray
    area: np.ndarray
    offset: np.ndarray
    midpoint: np.ndarray
    normal: np.ndarray
    component: np.ndarray

    def __len__(self):
        return len(self.node)


@dataclass(frozen=True, eq=False)
class Grid:
    spec: DomainSpec
    kind: str
    coords: np.ndarray
    radius: np.ndarray
    weights: np.ndarray
    links: tuple  # (i, j, conductance)
    hole_faces: FaceSet
    outer_faces: FaceSet
    keys: np.ndarray
    n_components: int
    _key_index: dict = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def spacing(self) -> float:
        return self.spec.spacing

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    def outer_nodes(self) -> np.ndarray:
        return np.unique(self.outer_faces.node)

    @property
    def hole_nodes(self) -> np.ndarray:
        return np.unique(self.hole_faces.node)

    def key_index(self) -> dict:
        if self._key_index is None:
            object.__setattr__(
                self, "_key_index", {tuple(k): i for i, k in enumerate(self.keys.tolist())}
            )
        return self._key_index

    def nearest_node(self, point) -> int:
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if self.kind == "radial":
            s = float(np.linalg.norm(p))
            return int(np.argmin(np.abs(self.radius - s)))
        return int(np.argmin(np.linalg.norm(self.coords - p, axis=1)))


def shared_nodes(a: Grid, b: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs of nodes present in both grids (same lattice position)."""
    if a.kind != b.kind or not math.isclose(a.spacing, b.spacing):
        raise InvalidSpec("grids are not nested: different backend or spacing")
    bi = b.key_index()
    ia, ib = [], []
    for i, k in enumerate(a.keys.tolist()):
        j = bi.get(tuple(k))
        if j is not None:
            ia.append(i)
            ib.append(j)
    return np.asarray(ia, dtype=int), np.asarray(ib, dtype=int)


def validate(spec: DomainSpec) -> None:
    n, h, R = spec.dimension, spec.spacing, spec.truncation_radius
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidSpec(f"dimension must be an integer >= 1, got {n!r}")
    if not h > 0:
        raise InvalidSpec(f"spacing must be positive, got {h}")
    if isinstance(spec.hole, BallHole):
        r = spec.hole.radius
        if not r > 0:
            raise InvalidSpec(f"hole radius must be positive, got {r}")
        if not r < R:
            raise InvalidSpec(f"hole radius {r} must be smaller than truncation radius {R}")
        steps = (R - r) / h
        if abs(steps - round(steps)) > _ALIGN_TOL * max(1.0, steps):
            raise InvalidSpec(f"spacing {h} does not divide R - r = {R - r}")
    elif isinstance(spec.hole, MaskHole):
        if n not in (2, 3):
            raise InvalidSpec(f"mask holes need dimension 2 or 3, got {n}")
        if not spec.hole.contains(np.zeros((1, n)))[0]:
            raise InvalidSpec("origin must lie inside the hole")
        if spec.hole.extent() >= R - 2 * h:
            # extent is an upper bound; fall back to the exact lattice check
            pts, _ = _lattice(n, h, R)
            masked = pts[spec.hole.contains(pts)]
            if len(masked) and np.linalg.norm(masked, axis=1).max() >= R - 2 * h:
                raise InvalidSpec("hole must lie within |x| < R - 2h")
    else:
        raise InvalidSpec(f"unknown hole type {type(spec.hole).__name__}")


def build_grid(spec: DomainSpec) -> Grid:
    validate(spec)
    if spec.backend == "radial":
        return _radial_grid(spec)
    return _cartesian_grid(spec)


def _radial_grid(spec: DomainSpec) -> Grid:
    N, h, R, r = spec.dimension, spec.spacing, spec.truncation_radius, spec.hole.radius
    n = int(round((R - r) / h))
    idx = np.arange(n + 1)
    s = r + idx * h
    s[-1] = R
    omega = sphere_area(N)
    weights = omega * s ** (N - 1) * h
    weights[0] *= 0.5
    weights[-1] *= 0.5
    smid = 0.5 * (s[:-1] + s[1:])
    links = (idx[:-1].copy(), idx[1:].copy(), omega * smid ** (N - 1) / h)

    def face(node, pos, normal):
        return FaceSet(
            node=np.array([node]),
            area=np.array([omega * pos ** (N - 1)]),
            offset=np.zeros(1),
            midpoint=np.array([[pos]]),
            normal=np.array([[normal]]),
            component=np.zeros(1, dtype=int),
        )

    return Grid(
        spec=spec,
        kind="radial",
        coords=s[:, None].copy(),
        radius=s,
        weights=weights,
        links=links,
        hole_faces=face(0, r, -1.0),
        outer_faces=face(n, R, 1.0),
        # positions on a fine sub-lattice of h; r need not be a multiple of h
        keys=np.round(s / h * _KEY_SUBDIV).astype(np.int64)[:, None],
        n_components=1,
    )


def _lattice(N, h, R):
    m = int(math.floor(R / h + _ALIGN_TOL)) + 1
    axes = [np.arange(-m, m + 1)] * N
    ij = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, N)
    return ij * h, ij


def _cartesian_grid(spec: DomainSpec) -> Grid:
    N, h, R = spec.dimension, spec.spacing, spec.truncation_radius
    m = int(math.floor(R / h + _ALIGN_TOL)) + 1
    shape = (2 * m + 1,) * N
    pts, ij = _lattice(N, h, R)
    in_ball = np.linalg.norm(pts, axis=1) <= R * (1 + 1e-12)
    hole = spec.hole.contains(pts)
    is_node = in_ball & ~hole

    node_id = np.full(len(pts), -1, dtype=int)
    node_id[is_node] = np.arange(is_node.sum())
    node_id = node_id.reshape(shape)
    hole_grid = hole.reshape(shape)
    labels, n_comp = ndimage.label(hole_grid)
    in_ball_grid = in_ball.reshape(shape)

    coords = pts[is_node]
    keys = ij[is_node]
    area = h ** (N - 1)
    cond = h ** (N - 2)

    li, lj = [], []
    hf = {"node": [], "mid": [], "normal": [], "comp": []}
    of = {"node": [], "normal": []}
    for axis in range(N):
        for sign in (1, -1):
            a = node_id
            b = np.roll(node_id, -sign, axis=axis)
            bh = np.roll(hole_grid, -sign, axis=axis)
            blab = np.roll(labels, -sign, axis=axis)
            bin_ = np.roll(in_ball_grid, -sign, axis=axis)
            # the lattice is padded by one layer so roll never wraps onto nodes
            src = a >= 0
            if sign == 1:
                pair = src & (b >= 0)
                li.append(a[pair])
                lj.append(b[pair])
            to_hole = src & bh
            e = np.zeros(N)
            e[axis] = sign
            nodes = a[to_hole]
            hf["node"].append(nodes)
            hf["mid"].append(coords[nodes] + 0.5 * h * e)
            hf["normal"].append(np.tile(e, (len(nodes), 1)))
            hf["comp"].append(blab[to_hole] - 1)
            to_out = src & ~bin_
            nodes = a[to_out]
            of["node"].append(nodes)
            of["normal"].append(np.tile(e, (len(nodes), 1)))

    li = np.concatenate(li)
    lj = np.concatenate(lj)
    order = np.lexsort((lj, li))
    links = (li[order], lj[order], np.full(len(li), cond))

    hn = np.concatenate(hf["node"])
    order = np.argsort(hn, kind="stable")
    hole_faces = FaceSet(
        node=hn[order],
        area=np.full(len(hn), area),
        offset=np.full(len(hn), 0.5 * h),
        midpoint=np.concatenate(hf["mid"])[order],
        normal=np.concatenate(hf["normal"])[order],
        component=np.concatenate(hf["comp"])[order].astype(int),
    )
    on = np.concatenate(of["node"])
    order = np.argsort(on, kind="stable")
    outer_faces = FaceSet(
        node=on[order],
        area=np.full(len(on), area),
        offset=np.zeros(len(on)),
        midpoint=coords[on[order]],
        normal=np.concatenate(of["normal"])[order],
        component=np.full(len(on), -1, dtype=int),
    )
    return Grid(
        spec=spec,
        kind="cartesian",
        coords=coords,
        radius=np.linalg.norm(coords, axis=1),
        weights=np.full(len(coords), h ** N),
        links=links,
        hole_faces=hole_faces,
        outer_faces=outer_faces,
        keys=keys,
        n_components=int(n_comp),
    )
