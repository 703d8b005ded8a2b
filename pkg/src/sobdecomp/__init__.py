"""Orthogonal decompositions of H^1 induced by regular subspaces of 1-d Brownian
motion, and the alpha-harmonic Neumann problem on an open set G."""

from .function_space import (
    FormParams,
    GridFunction,
    Mesh,
    dirichlet_D,
    form_subspace,
    inner_e_alpha,
    inner_L2,
    membership_F_s,
    random_grid_function,
)
from .geometry import (
    Interval,
    OpenSetG,
    ScaleFunction,
    cantor_complement,
    f_components,
    g_measure,
    normalize_intervals,
    scale_eval,
)
from .harmonic import (
    IntervalSolution,
    SolutionFamily,
    closed_form_on_interval,
    decompose_zero_alpha,
    membership_G_alpha,
    neumann_residual,
    ode_residual,
    solve_neumann,
    solve_zero_alpha,
)
from .projection import (
    DecompResult,
    DofMap,
    SubspaceBasis,
    basis_H_s_F,
    decompose_F_s,
    decompose_part,
    project_onto_basis,
    verify_three_way,
)

__version__ = "0.1.0"
