"""Heat flow on exterior domains with theta-parameterized boundary conditions.

The package discretizes ``u_t = Laplacian u`` outside a compact hole with
``sin(pi*theta/2) du/dn + cos(pi*theta/2) u = 0`` on the hole boundary,
computes the asymptotic profile by elliptic and parabolic constructions,
and measures mass loss.
"""

from .boundary import Outer, ThetaSpec, classify_boundary, robin_coefficient
from .config import ExperimentConfig, load_config, parse_config
from .errors import *  # noqa: F401,F403
from .geometry import BallHole, DomainSpec, MaskHole, build_grid, shared_nodes
from .heat import TimeSchedule, evolve, kernel_column, parabolic_profile, step
from .linsolve import pcg, solve_spd
from .mass import MassTrace, asymptotic_mass, conserved_functional, fit_decay_exponent, mass
from .operator import apply, assemble_operator
from .profile import closed_form_profile, compute_profile, profile_constant, solve_truncated_profile
from .slowdecay import slow_decay_construct, simulate_bump

__version__ = "0.1.0"
