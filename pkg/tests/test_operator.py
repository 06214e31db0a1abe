import math

import numpy as np
import pytest

from conftest import make_op
from exterior_heat.boundary import Outer, ThetaSpec, angular_sine
from exterior_heat.geometry import BallHole, DomainSpec, MaskHole
from exterior_heat.operator import apply, boundary_conductance
from exterior_heat.profile import closed_form_profile

LINE = DomainSpec(1, BallHole(1.0), 3.0, 1.0)


def test_neumann_row_sums_vanish():
    op = make_op(LINE, 1.0, Outer.NEUMANN0)
    np.testing.assert_allclose(np.asarray(op.stiffness.sum(axis=1)).ravel(), 0.0, atol=1e-15)
    np.testing.assert_allclose(apply(op, np.ones(op.size)), 0.0, atol=1e-15)


def test_linear_field_harmonic_in_1d():
    op = make_op(DomainSpec(1, BallHole(1.0), 3.0, 0.25), 0.0, Outer.NEUMANN0)
    s = op.grid.radius
    Au = op.stiffness @ (s - 1.0)
    interior = (s > 1.0) & (s < 3.0)
    np.testing.assert_allclose(Au[interior], 0.0, atol=1e-13)


def test_robin_diagonal_entry_3d():
    h = 0.25
    op = make_op(DomainSpec(3, BallHole(1.0), 2.0, h), 0.5)
    link = 4 * math.pi * (1 + h / 2) ** 2 / h
    robin = 1.0 * 4 * math.pi * 1.0**2
    assert op.stiffness[0, 0] == pytest.approx(link + robin, rel=1e-12)


def test_zero_field_maps_to_zero():
    op = make_op(DomainSpec(2, MaskHole.box(0.5), 3.0, 0.25), 0.3)
    np.testing.assert_array_equal(apply(op, np.zeros(op.size)), 0.0)


def test_closed_form_residual_second_order():
    def residual(h):
        op = make_op(DomainSpec(3, BallHole(1.0), 2.0, h), 0.0, Outer.FIXED_VALUE)
        s = op.grid.radius
        u = closed_form_profile(3, 1.0, 0.0, s, R=2.0)
        return np.abs(apply(op, u)[~op.fixed]).max()

    ratio = residual(0.05) / residual(0.025)
    assert 3.5 <= ratio <= 4.5


@pytest.mark.parametrize(
    "spec,theta",
    [
        (DomainSpec(3, BallHole(1.0), 3.0, 0.1), 0.3),
        (DomainSpec(2, MaskHole.box(0.5), 3.0, 0.2), ThetaSpec(default=angular_sine(0.5, 0.4))),
        (DomainSpec(3, MaskHole.ball(0.6, dimension=3), 2.0, 0.25), 0.0),
    ],
)
def test_weighted_symmetry_spectrum_and_sign_pattern(spec, theta, rng):
    op = make_op(spec, theta, Outer.DIRICHLET0, gamma=0.1)
    f = rng.standard_normal(op.size)
    g = rng.standard_normal(op.size)
    f[op.fixed] = g[op.fixed] = 0.0
    lhs, rhs = op.inner(op.apply(f), g), op.inner(f, op.apply(g))
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert op.inner(op.apply(f), f) >= 0
    assert op.is_m_matrix()


def test_boundary_conductance_monotone_and_limits():
    b = np.array([0.0, 0.5, 1.0, 10.0, 1e6, np.inf])
    c = boundary_conductance(b, 2.0, 0.25)
    assert (np.diff(c) >= 0).all()
    assert c[-1] == pytest.approx(8.0)
    np.testing.assert_allclose(boundary_conductance(b[:-1], 2.0, 0.0), 2.0 * b[:-1])


def test_robin_diagonal_ordered_in_theta():
    spec = DomainSpec(2, MaskHole.ball(1.0), 3.0, 0.1)
    lo = make_op(spec, ThetaSpec(default=angular_sine(0.3, 0.2)))
    hi = make_op(spec, ThetaSpec(default=angular_sine(0.5, 0.2)))
    assert (lo.face_terms >= hi.face_terms).all()
    assert (lo.stiffness.diagonal() >= hi.stiffness.diagonal()).all()


def test_matrix_dump_round_trip(tmp_path):
    op = make_op(DomainSpec(2, MaskHole.box(0.5), 2.0, 0.5), 0.5)
    path = op.dump_coo(tmp_path / "k.coo")
    data = np.loadtxt(path)
    K = op.stiffness.tocoo()
    assert len(data) == K.nnz
    np.testing.assert_array_equal(data[:, 2], K.data)


@pytest.mark.parametrize("theta", [5e-324, 2.2250738585072014e-308, 1e-200])
@pytest.mark.parametrize(
    "spec", [DomainSpec(2, BallHole(1.0), 1.4, 0.1), DomainSpec(2, MaskHole.ball(1.0), 3.0, 0.1)]
)
def test_tiny_theta_matches_dirichlet_limit(spec, theta):
    from exterior_heat.profile import solve_truncated_profile

    a = solve_truncated_profile(spec, ThetaSpec.constant(theta, Outer.FIXED_VALUE)).phi
    d = solve_truncated_profile(spec, ThetaSpec.constant(0.0, Outer.FIXED_VALUE)).phi
    assert np.all(np.isfinite(a))
    np.testing.assert_allclose(a, d, atol=1e-12)
