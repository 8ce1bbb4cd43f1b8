"""Constrained exponential random graph ensembles over block graphons."""

from .errors import BudgetError, DomainError, EmptyWindowError, NonConvergenceError
from .graphon import (
    BlockGraphon,
    anticlique,
    block_distance,
    canonical,
    checkerboard,
    clique,
    complement,
    degree_profile,
    edge_density,
    entropy_integral,
    i_fun,
    max_triangle_density,
    max_two_star_density,
    objective,
    uniform,
    uniform_objective,
)
from .oracle import EdgeSwapChain, enumerate_psi, mcmc_sample
from .scalar_phase import (
    ScalarModel,
    critical_point,
    global_maximizers,
    transition_curve,
    u_region,
    u_region_optimizer,
)
from .solver import (
    SolverConfig,
    SolveResult,
    certify,
    el_fixed_point_star,
    limit_ratio,
    monotonicity_audit,
    repulsive_triangle_scan,
    saddle_check,
    second_variation,
    solve_canonical,
    stationary_delta,
    stationary_graphon,
    threshold_twostar,
    threshold_ve,
)
from .subgraph import (
    AdjacencyGraph,
    SubgraphSpec,
    edge,
    hom_density_blocks,
    hom_density_gradient,
    hom_density_graph,
    make_subgraph,
    parse_subgraph,
    p_star,
    triangle,
    two_star,
)

__version__ = "0.1.0"
