"""Posterior bounds in credal networks (Bayesian networks with sets of distributions)."""

from .approx import (
    anneal_search,
    gradient_bounds,
    gradient_theta,
    log_posterior_likelihood,
    projected_gradient_ascent,
    qem_bounds,
    qem_run,
)
from .ccm import TransformedNetwork, apply_ccm, instantiate_transparent, with_transparent_priors
from .credal import (
    CredalSpec,
    LinearConstraintSet,
    Polytope,
    constraints_from_density_bounds,
    constraints_from_density_ratio,
    constraints_from_total_variation,
    contains_distribution,
    enumerate_polytope_vertices,
    facets_from_vertices,
    vertices_from_belief_function,
    vertices_from_eps_contamination,
)
from .errors import (
    CapExceededError,
    CredalNetError,
    InfeasibleCredalSetError,
    InvalidNetworkError,
    IterationLimitError,
    ZeroLikelihoodError,
    ZeroProbabilityEvidenceError,
)
from .fileformat import (
    InputError,
    NetworkDocument,
    ParseError,
    SemanticError,
    build_model,
    format_document,
    load_model,
    parse_network_file,
)
from .lavine import lavine_bracket, lavine_lower_bound, lavine_upper_bound
from .lp import LinearProgram, SimplexSolution, simplex_solve
from .natural import build_ne_program, charnes_cooper, ne_bounds
from .network import (
    DiscreteNetwork,
    Factor,
    Variable,
    brute_force_joint,
    eliminate,
    make_network,
    posterior_marginal,
    validate_network,
)
from .results import serialize_results
from .type1 import (
    BoundsResult,
    UtilityFunction,
    bounds_by_enumeration,
    bounds_by_joint_max,
    expectation_bounds,
    variance_bounds,
    variance_bounds_iterative,
)

__version__ = "0.1.0"
