import math

import numpy as np
import pytest

from exterior_heat.boundary import (
    Constant,
    FaceClass,
    Outer,
    ThetaSpec,
    angular_sine,
    classify_boundary,
    robin_coefficient,
)
from exterior_heat.errors import InconsistentInputs, MissingComponent, MixedDirichlet, OutOfRange
from exterior_heat.geometry import BallHole, DomainSpec, MaskHole, build_grid


def test_robin_coefficient_endpoints():
    assert robin_coefficient(1.0) == 0.0
    assert robin_coefficient(0.5) == pytest.approx(1.0, abs=1e-15)
    assert robin_coefficient(0.0) == math.inf


def test_robin_coefficient_matches_cotangent():
    for t in np.linspace(0.01, 0.99, 25):
        assert robin_coefficient(t) == pytest.approx(1.0 / math.tan(math.pi * t / 2), rel=1e-12)


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_robin_coefficient_out_of_range(bad):
    with pytest.raises(OutOfRange):
        robin_coefficient(bad)


@pytest.fixture(scope="module")
def circle_grid():
    return build_grid(DomainSpec(2, MaskHole.ball(1.0), 3.0, 0.1))


def test_dirichlet_component_all_class_d(circle_grid):
    bc = classify_boundary(circle_grid, ThetaSpec.constant(0.0))
    assert (bc.cls == FaceClass.D).all()
    assert np.isinf(bc.robin).all()


def test_neumann_all_class_n(circle_grid):
    bc = classify_boundary(circle_grid, ThetaSpec.constant(1.0))
    assert (bc.cls == FaceClass.N).all()
    assert (bc.robin == 0).all()


def test_sampled_theta_evaluated_at_face_midpoints(circle_grid):
    bc = classify_boundary(circle_grid, ThetaSpec(default=angular_sine(0.5, 0.4)))
    mid = circle_grid.hole_faces.midpoint
    theta = 0.5 + 0.4 * np.sin(np.arctan2(mid[:, 1], mid[:, 0]))
    assert (bc.cls == FaceClass.R).all()
    np.testing.assert_allclose(bc.theta, theta, rtol=1e-14)
    np.testing.assert_allclose(bc.robin, 1 / np.tan(np.pi * theta / 2), rtol=1e-12)


def test_classification_is_partition(circle_grid):
    bc = classify_boundary(circle_grid, ThetaSpec(default=angular_sine(0.55, 0.45)))
    counts = sum((bc.cls == c).astype(int) for c in FaceClass)
    assert (counts == 1).all()
    assert len(bc) == len(circle_grid.hole_faces)


def test_robin_coefficient_decreases_with_theta(circle_grid):
    lo = classify_boundary(circle_grid, ThetaSpec(default=angular_sine(0.4, 0.2)))
    hi = classify_boundary(circle_grid, ThetaSpec(default=angular_sine(0.6, 0.2)))
    assert (lo.robin >= hi.robin).all()


def test_mixed_dirichlet_rejected(circle_grid):
    def half_zero(p):
        return np.where(p[:, 0] > 0, 0.0, 0.5)

    from exterior_heat.boundary import Sampled

    with pytest.raises(MixedDirichlet):
        classify_boundary(circle_grid, ThetaSpec(default=Sampled(half_zero)))


def test_components_get_their_own_theta():
    hole = MaskHole.ball(0.6).union(MaskHole.ball(0.5, center=(2.0, 0.0)))
    g = build_grid(DomainSpec(2, hole, 5.0, 0.25))
    bc = classify_boundary(g, ThetaSpec({0: Constant(0.0), 1: Constant(1.0)}))
    comp = g.hole_faces.component
    assert set(bc.cls[comp == 0]) == {FaceClass.D}
    assert set(bc.cls[comp == 1]) == {FaceClass.N}
    with pytest.raises(MissingComponent):
        classify_boundary(g, ThetaSpec({0: Constant(0.0)}))


def test_radial_requires_constant_theta():
    g = build_grid(DomainSpec(3, BallHole(1.0), 2.0, 0.1))
    with pytest.raises(InconsistentInputs):
        classify_boundary(g, ThetaSpec(default=angular_sine()))


def test_constant_out_of_range():
    with pytest.raises(OutOfRange):
        ThetaSpec.constant(1.5)


def test_outer_values():
    assert Outer.FIXED_VALUE.value_imposed == 1.0
    assert Outer.DIRICHLET0.value_imposed == 0.0
    assert Outer.NEUMANN0.value_imposed is None


@pytest.mark.parametrize("theta", [5e-324, 1e-310, 2.2250738585072014e-308])
def test_robin_coefficient_finite_for_subnormal_theta(theta):
    b = robin_coefficient(theta)
    assert math.isfinite(b) and b > 1e300
