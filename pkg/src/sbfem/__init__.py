"""Scaled boundary finite element solver for the Poisson problem on a circular sector."""

from .angular_basis import AngularMesh, eval_basis, eval_basis_deriv, gauss_rule, lobatto_points, make_mesh, make_uniform_mesh
from .assembly import OperatorPair, SeparableLoad, assemble_pair, expand_solution, project_load, reduce_dirichlet
from .exceptions import ConfigError, ResonanceError, SBFEMError, SpectralError
from .problems import PROBLEM_IDS, builtin_problem, exact_solution
from .semidiscrete import (
    CoordinateMap,
    ScalarField,
    WeightedNormSpec,
    evaluate,
    evaluate_dr,
    evaluate_dtheta,
    h1tilde_error,
    h1tilde_norm,
    interpolate,
    radial_trace,
    weighted_norm,
)
from .solver import RadialTerm, SbfemProblem, SemiDiscreteSolution, SideData, particular_solution, residual_check, solve
from .spectral import ModalDecomposition, build_hamiltonian, solve_gevp
from .study import ConvergenceRecord, StudyConfig, emit_csv, emit_plot_data, estimate_rates, load_config, read_csv, run_study

__version__ = "0.1.0"
