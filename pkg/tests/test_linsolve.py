import numpy as np
import pytest
import scipy.sparse as sp

from conftest import make_op
from exterior_heat.boundary import Outer
from exterior_heat.errors import NotConverged, SingularSystem
from exterior_heat.geometry import BallHole, DomainSpec, MaskHole
from exterior_heat.linsolve import default_max_iter, pcg, solve_spd


def test_identity_system():
    x, rep = pcg(sp.identity(1), np.array([5.0]))
    assert x[0] == pytest.approx(5.0)
    assert rep.converged


def test_gamma_one_neumann_constant():
    op = make_op(DomainSpec(1, BallHole(1.0), 3.0, 1.0), 1.0, Outer.NEUMANN0, gamma=1.0)
    u, rep = solve_spd(op, np.full(op.size, 5.0), tol=1e-14)
    np.testing.assert_allclose(u, 5.0, rtol=1e-13)


def test_quadratic_exact_on_three_point_stencil():
    op = make_op(DomainSpec(1, BallHole(1.0), 3.0, 0.1), 0.0, Outer.DIRICHLET0)
    u, rep = solve_spd(op, np.ones(op.size), tol=1e-14)
    s = op.grid.radius
    np.testing.assert_allclose(u, (s - 1) * (3 - s) / 2, atol=1e-12)
    assert rep.converged


@pytest.mark.parametrize("pre", ["jacobi", "sgs", None])
def test_random_rhs_on_mask_grid(rng, pre):
    op = make_op(DomainSpec(2, MaskHole.box([0.5, 1.0]), 3.0, 0.1), 0.25)
    u, rep = solve_spd(op, rng.standard_normal(op.size), tol=1e-10, preconditioner=pre)
    assert rep.converged and rep.residual <= 1e-10
    hist = np.asarray(rep.history)
    assert (np.diff(hist) <= 0).all()


def test_nonnegative_rhs_gives_nonnegative_solution(rng):
    op = make_op(DomainSpec(2, MaskHole.ball(1.0), 3.0, 0.1), 0.6)
    u, _ = solve_spd(op, rng.random(op.size), tol=1e-12)
    assert u.min() >= -1e-12


def test_pure_neumann_is_singular():
    op = make_op(DomainSpec(3, BallHole(1.0), 2.0, 0.1), 1.0, Outer.NEUMANN0)
    with pytest.raises(SingularSystem):
        solve_spd(op, np.ones(op.size))


def test_not_converged_carries_full_field():
    op = make_op(DomainSpec(2, MaskHole.box(0.5), 4.0, 0.1), 0.0)
    with pytest.raises(NotConverged) as info:
        solve_spd(op, np.ones(op.size), tol=1e-14, max_iter=3)
    assert info.value.solution.shape == (op.size,)
    assert not info.value.report.converged


def test_default_max_iter():
    assert default_max_iter(10_000) == 20_000
    assert default_max_iter(4) == 100
