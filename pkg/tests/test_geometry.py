import itertools
import math

import numpy as np
import pytest

from exterior_heat.errors import InvalidSpec
from exterior_heat.geometry import BallHole, DomainSpec, MaskHole, build_grid, shared_nodes, sphere_area


def test_radial_n3_weights_with_end_halving():
    g = build_grid(DomainSpec(3, BallHole(1.0), 2.0, 0.5))
    np.testing.assert_allclose(g.radius, [1.0, 1.5, 2.0])
    # 4*pi*s^2*h, halved at both end nodes
    np.testing.assert_allclose(g.weights, [math.pi, 4.5 * math.pi, 4 * math.pi], rtol=1e-14)


def test_radial_n1_single_ray():
    g = build_grid(DomainSpec(1, BallHole(1.0), 3.0, 1.0))
    np.testing.assert_allclose(g.radius, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(g.weights, [0.5, 1.0, 0.5])


def test_mask_square_node_count_matches_enumeration():
    h, R = 0.25, 4.0
    g = build_grid(DomainSpec(2, MaskHole.box(0.5), R, h))
    n = int(R / h)
    count = 0
    for i, j in itertools.product(range(-n, n + 1), repeat=2):
        x, y = i * h, j * h
        if x * x + y * y <= R * R and not (abs(x) <= 0.5 and abs(y) <= 0.5):
            count += 1
    assert g.size == count
    np.testing.assert_array_equal(g.weights, np.full(count, h * h))
    assert not MaskHole.box(0.5).contains(g.coords).any()


def test_mask_faces_have_one_component_each():
    hole = MaskHole.box(0.5, center=(-1.5, 0.0)).union(MaskHole.box(0.5, center=(1.5, 0.0))).union(
        MaskHole.box([1.5, 0.2])
    )
    g = build_grid(DomainSpec(2, hole, 5.0, 0.25))
    assert g.n_components == 1
    two = MaskHole.ball(0.6).union(MaskHole.ball(0.5, center=(2.0, 0.0)))
    g2 = build_grid(DomainSpec(2, two, 5.0, 0.25))
    assert g2.n_components == 2
    assert set(np.unique(g2.hole_faces.component)) == {0, 1}


@pytest.mark.parametrize("N", [1, 2, 3])
def test_total_weight_converges_to_annulus_volume(N):
    def err(h):
        g = build_grid(DomainSpec(N, BallHole(1.0), 3.0, h))
        exact = sphere_area(N) / N * (3.0**N - 1.0)
        return abs(g.weights.sum() - exact)

    e1, e2 = err(0.1), err(0.05)
    # trapezoidal weights are exact for N <= 2 and second order for N = 3
    if N < 3:
        assert e1 < 1e-12 and e2 < 1e-12
    else:
        assert 3.5 <= e1 / e2 <= 4.5


def test_cartesian_volume_first_order():
    def err(h):
        g = build_grid(DomainSpec(2, MaskHole.ball(1.0), 4.0, h))
        return abs(g.weights.sum() - math.pi * (16 - 1))

    assert err(0.05) < err(0.2)
    assert err(0.05) / (math.pi * 15) < 0.02


def test_build_grid_deterministic():
    spec = DomainSpec(2, MaskHole.ball(1.0).union(MaskHole.box([0.3, 1.5])), 3.0, 0.1)
    a, b = build_grid(spec), build_grid(spec)
    np.testing.assert_array_equal(a.coords, b.coords)
    np.testing.assert_array_equal(a.weights, b.weights)
    for x, y in zip(a.links, b.links):
        np.testing.assert_array_equal(x, y)


def test_weights_positive_and_nested_grids_share_nodes():
    small = build_grid(DomainSpec(3, BallHole(1.0), 2.0, 0.1))
    big = build_grid(DomainSpec(3, BallHole(1.0), 4.0, 0.1))
    assert (small.weights > 0).all()
    ia, ib = shared_nodes(small, big)
    assert len(ia) == small.size
    np.testing.assert_allclose(small.radius[ia], big.radius[ib])


@pytest.mark.parametrize(
    "spec",
    [
        DomainSpec(3, BallHole(2.0), 2.0, 0.1),
        DomainSpec(3, BallHole(1.0), 2.05, 0.1),
        DomainSpec(3, BallHole(-1.0), 2.0, 0.1),
        DomainSpec(2, MaskHole.box(0.5, center=(2.0, 0.0)), 4.0, 0.1),
        DomainSpec(2, MaskHole.box(3.9), 4.0, 0.1),
        DomainSpec(4, MaskHole.box(0.5, dimension=4), 4.0, 0.5),
        DomainSpec(2, MaskHole.box(0.5), 4.0, 0.0),
    ],
)
def test_invalid_specs_rejected(spec):
    with pytest.raises(InvalidSpec):
        build_grid(spec)


def test_radial_keys_unique_when_hole_radius_is_off_lattice():
    # r = 0.5, h = 0.2 puts nodes at half-integer multiples of h
    a = build_grid(DomainSpec(1, BallHole(0.5), 1.9, 0.2))
    b = build_grid(DomainSpec(1, BallHole(0.5), 2.5, 0.2))
    assert len({tuple(k) for k in a.keys.tolist()}) == a.size
    ia, ib = shared_nodes(a, b)
    np.testing.assert_array_equal(ia, np.arange(a.size))
    np.testing.assert_allclose(a.radius[ia], b.radius[ib])
