import math

import numpy as np
import pytest

from exterior_heat.boundary import Outer, ThetaSpec
from exterior_heat.errors import InconsistentInputs
from exterior_heat.geometry import BallHole, DomainSpec, MaskHole
from exterior_heat.profile import (
    closed_form_profile,
    compute_profile,
    profile_constant,
    solve_truncated_profile,
)

FIXED = Outer.FIXED_VALUE


def test_closed_form_examples():
    assert closed_form_profile(3, 1.0, 0.0, 1.5, R=2.0) == pytest.approx(2 / 3)
    assert closed_form_profile(3, 1.0, 0.5, 2.0) == pytest.approx(0.75)
    assert closed_form_profile(1, 1.0, 0.0, 2.0, R=3.0) == pytest.approx(0.5)
    assert profile_constant(3, 0.5) == pytest.approx(2.0)
    assert profile_constant(3, 0.0) == 1.0


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("theta", [0.0, 0.3, 0.7])
def test_closed_form_solves_the_boundary_value_problem(N, theta):
    # independent check: finite differences of the formula satisfy the ODE and boundary data
    r, R, eps = 1.0, 3.0, 1e-4
    f = lambda s: closed_form_profile(N, r, theta, s, R=R)  # noqa: E731
    s = np.linspace(1.3, 2.7, 7)
    d1 = (f(s + eps) - f(s - eps)) / (2 * eps)
    d2 = (f(s + eps) - 2 * f(s) + f(s - eps)) / eps**2
    np.testing.assert_allclose(d2 + (N - 1) / s * d1, 0.0, atol=1e-5)
    assert f(R) == pytest.approx(1.0)
    a = 0.5 * math.pi * theta
    du = (f(r + eps) - f(r)) / eps
    # the normal points into the hole, so du/dn = -u'
    assert math.sin(a) * (-du) + math.cos(a) * f(r) == pytest.approx(0.0, abs=1e-3)


def test_limit_form_for_n3():
    x = np.array([1.5, 2.0, 5.0])
    for theta in (0.0, 0.5):
        C = 1 + math.tan(math.pi * theta / 2)
        np.testing.assert_allclose(closed_form_profile(3, 1.0, theta, x), 1 - 1 / (C * x))


def test_truncated_profile_n3():
    tp = solve_truncated_profile(DomainSpec(3, BallHole(1.0), 2.0, 0.05), ThetaSpec.constant(0.0, FIXED))
    i = tp.grid.nearest_node([1.5])
    assert tp.phi[i] == pytest.approx(2 / 3, abs=1e-4)


def test_truncated_profile_n2_log_law():
    R = math.e**2
    h = (R - 1) / 400
    tp = solve_truncated_profile(DomainSpec(2, BallHole(1.0), R, h), ThetaSpec.constant(0.0, FIXED))
    i = tp.grid.nearest_node([math.e])
    s = tp.grid.radius[i]
    assert tp.phi[i] == pytest.approx(math.log(s) / 2, abs=1e-4)
    assert abs(s - math.e) < h


@pytest.mark.parametrize("spec", [DomainSpec(3, BallHole(1.0), 2.0, 0.1), DomainSpec(2, MaskHole.box(0.5), 3.0, 0.2)])
def test_neumann_profile_is_one(spec):
    tp = solve_truncated_profile(spec, ThetaSpec.constant(1.0, FIXED))
    np.testing.assert_allclose(tp.phi, 1.0, atol=1e-12)


def test_profile_requires_fixed_outer():
    with pytest.raises(InconsistentInputs):
        solve_truncated_profile(DomainSpec(3, BallHole(1.0), 2.0, 0.1), ThetaSpec.constant(0.0))


@pytest.fixture(scope="module")
def ladder_n3():
    return compute_profile(DomainSpec(3, BallHole(1.0), 4.0, 0.05), ThetaSpec.constant(0.0), ladder=[4, 8, 16, 32], window=3.0)


def test_ladder_n3_approaches_limit(ladder_n3):
    res = ladder_n3
    m = res.window_mask()
    s = res.grid.radius[m]
    # the last rung matches its own truncated closed form to O(h^2)
    assert np.abs(res.phi[m] - closed_form_profile(3, 1.0, 0.0, s, R=32.0)).max() <= 1e-4
    # and the gap to the limit 1 - 1/|x| is the O(1/R) truncation gap
    gaps = [np.abs(p.phi[p.grid.radius <= 3.0] - (1 - 1 / p.grid.radius[p.grid.radius <= 3.0])).max() for p in res.history]
    assert all(abs(g * (R - 1) - 2 / 3) < 2e-3 * R for g, R in zip(gaps, (4, 8, 16, 32)))
    assert ((res.phi >= 0) & (res.phi <= 1)).all()
    sups = [st.sup_difference for st in res.ladder[1:]]
    assert all(d >= 0 for d in sups) and sups == sorted(sups, reverse=True)


def test_ladder_values_nonincreasing(ladder_n3):
    vals = ladder_n3.ladder_values([2.0])
    assert (np.diff(vals) <= 1e-11).all()


def test_ladder_n2_log_decay_not_converged():
    res = compute_profile(DomainSpec(2, BallHole(1.0), 4.0, 0.05), ThetaSpec.constant(0.0), ladder=[4, 8, 16, 32])
    vals = res.ladder_values([2.0])
    expected = [math.log(2) / math.log(R) for R in (4, 8, 16, 32)]
    np.testing.assert_allclose(vals, expected, atol=1e-4)
    assert not res.converged


def test_robin_limit_uses_c_theta():
    res = compute_profile(DomainSpec(3, BallHole(1.0), 4.0, 0.05), ThetaSpec.constant(0.5), ladder=[4, 8, 16, 32])
    assert res.value_at([2.0]) == pytest.approx(0.75, abs=0.02)


def test_report_shape(ladder_n3):
    rep = ladder_n3.report()
    assert rep["ladder"][0]["sup_difference"] is None
    assert [s["R"] for s in rep["ladder"]] == [4, 8, 16, 32]


def test_bad_ladder_and_window():
    spec = DomainSpec(3, BallHole(1.0), 4.0, 0.1)
    with pytest.raises(InconsistentInputs):
        compute_profile(spec, ThetaSpec.constant(0.0), ladder=[8, 4])
    with pytest.raises(InconsistentInputs):
        compute_profile(spec, ThetaSpec.constant(0.0), ladder=[4, 8], window=5.0)
