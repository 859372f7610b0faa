"""lepnc: a 2D polytopal non-conforming finite-element toolkit with locally
enriched bases, mass lumping, nonlinear degenerate-diffusion solvers and
gradient-discretisation diagnostics."""

__version__ = "0.1.0"

from .kernels import BACKEND
from .mesh import (PolytopalMesh, build_mesh, estimate_rho, gen_cartesian,
                   gen_hexagonal, gen_kershaw, gen_locally_refined, read_mesh,
                   regularity_gamma, write_mesh)
from .space import (DiscreteField, LepncSpace, broken_h1_norm, build_space,
                    eval_bubble, eval_field, interpolate_I, interpolate_J,
                    l2_norm, lumped_l2_norm, lumped_reconstruct, masslump)
from .schemes import (LinearProblem, NewtonConfig, NonlinearProblem,
                      SolveReport, assemble_linear, newton_solve, solve_spd,
                      static_condense)
from .gdm import conformity_wd, consistency_sd, poincare_cd
from .harness import ConvergenceReport, emit, get_case, registry, run_family

__all__ = [name for name in dir() if not name.startswith("_")]
