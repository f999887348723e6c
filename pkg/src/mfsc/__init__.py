"""Maximum feasible subsystem solver over closed sets."""
from mfsc._kernels import BACKEND
from mfsc.eas import EasConfig, EasReport, eas_run, eps_schedule, inner_tolerance
from mfsc.objective import Problem, eval_phi0, eval_psi_sum, extract_subsystem, subgradient
from mfsc.penalty import PenaltyFamily, PenaltyKind, phi, psi, psi_prime, psi_prime_lipschitz
from mfsc.sets import (
    FinitePointSet,
    FullSpace,
    Halfspace,
    HalfspaceSystem,
    SparseBox,
    UnionHalfspaceSystem,
    UnionSet,
    brute_force_project,
    project,
    sq_dist,
)
from mfsc.spg import (
    LinesearchUnderflow,
    SolveReport,
    SpgConfig,
    Status,
    averaged_projection_run,
    spg_solve,
)

__version__ = "0.1.0"
