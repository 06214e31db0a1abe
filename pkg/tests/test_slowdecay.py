import math

import numpy as np
import pytest

from exterior_heat.boundary import ThetaSpec
from exterior_heat.eigen import dirichlet_ball_eigenpair
from exterior_heat.errors import InvalidSpec, NoRoom
from exterior_heat.geometry import BallHole, DomainSpec, MaskHole
from exterior_heat.slowdecay import inverse_target, level_time, power_target, simulate_bump, slow_decay_construct
from exterior_heat.verify import bessel_j0


def j0_zero():
    from scipy.optimize import brentq

    return brentq(bessel_j0, 2.0, 3.0, xtol=1e-15)


@pytest.mark.parametrize(
    "N,exact",
    [(1, math.pi**2 / 4), (2, None), (3, math.pi**2)],
)
def test_eigenvalues(N, exact):
    if exact is None:
        exact = j0_zero() ** 2
    eig = dirichlet_ball_eigenpair(N, 1000)
    assert eig.eigenvalue == pytest.approx(exact, rel=1e-3)
    assert np.dot(eig.weights, eig.psi) == pytest.approx(1.0)
    assert (eig.psi >= 0).all()


def test_bessel_oracle_against_scipy():
    from scipy.special import j0

    for x in (0.0, 0.7, 2.404825557695773, 4.1):
        assert bessel_j0(x) == pytest.approx(j0(x), abs=1e-13)


def test_eigenfunction_shape_n3():
    eig = dirichlet_ball_eigenpair(3, 1000)
    s = np.array([0.2, 0.5, 0.8])
    ratio = eig.psi_at(s) / (np.sin(math.pi * s) / s)
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-3)
    assert eig.psi_at(1.5) == 0.0


def test_level_time_power_target():
    assert level_time(power_target(0.25), 2.0**-3) == pytest.approx(4095.0, rel=1e-10)


def test_first_radius_power_target():
    lam = dirichlet_ball_eigenpair(2, 1000).eigenvalue
    assert math.sqrt(lam * 4095 / math.log(2)) == pytest.approx(184.9, abs=0.1)
    plan = slow_decay_construct(2, DomainSpec(2, MaskHole.ball(1.0), 4.0, 0.1), power_target(0.25), 1)
    assert plan.times[0] == pytest.approx(4095.0)
    assert plan.radii[0] == pytest.approx(184.9)


def test_inverse_target_plan():
    plan = slow_decay_construct(2, DomainSpec(2, MaskHole.ball(1.0), 4.0, 0.1), inverse_target(), 5)
    assert plan.times[0] == pytest.approx(8.0)
    assert plan.radii[0] == pytest.approx(8.2)
    assert plan.violations() == []
    assert (plan.retention() >= 0.5).all()
    assert plan.weights.sum() == pytest.approx(1 - 2.0**-5)
    x, R = plan.centers, plan.radii
    assert (x[1:] - R[1:] - (x[:-1] + R[:-1]) >= 2 * 0.1 - 1e-9).all()


def test_plan_dimension_and_room():
    hole = DomainSpec(2, MaskHole.ball(1.0), 4.0, 0.1)
    with pytest.raises(InvalidSpec):
        slow_decay_construct(3, hole, inverse_target(), 2)
    with pytest.raises(NoRoom) as info:
        slow_decay_construct(2, hole, inverse_target(), 3, max_extent=30.0)
    assert info.value.required_extent > 30.0


def test_single_bump_keeps_half_mass_n1():
    hole = DomainSpec(1, BallHole(1.0), 4.0, 0.1)
    plan = slow_decay_construct(1, hole, inverse_target(), 2, eigen_resolution=400)
    check = simulate_bump(plan, 1, hole, ThetaSpec.constant(0.0))
    assert check.initial_mass == pytest.approx(0.5, rel=1e-2)
    assert check.passed
    assert check.mass >= 0.95 * 0.25
