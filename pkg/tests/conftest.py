import numpy as np
import pytest

from exterior_heat.boundary import Outer, ThetaSpec, classify_boundary
from exterior_heat.geometry import build_grid
from exterior_heat.operator import assemble_operator


def make_op(spec, theta, outer=Outer.DIRICHLET0, gamma=0.0):
    grid = build_grid(spec)
    ts = theta if isinstance(theta, ThetaSpec) else ThetaSpec.constant(theta)
    return assemble_operator(grid, classify_boundary(grid, ts.with_outer(outer)), gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
