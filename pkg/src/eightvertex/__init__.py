"""Zero-field eight-vertex model: exact evaluation, the directed-loop chain,
the self-reduction estimator and the amplifier map."""

__version__ = "0.1.0"

from .errors import (
    BudgetExhausted,
    EightVertexError,
    GraphError,
    Infeasible,
    InvalidPairing,
    InvalidPattern,
    MarginError,
    NoNonnegativeSolution,
    RegionError,
    TooLarge,
    ZeroWeightState,
)
from .model import (
    Pairing,
    Params,
    RegionFlags,
    SignedPairing,
    WeightFunction,
    local_weight,
    pairing_sign,
    region_classify,
    solve_congestion_weights,
    solve_weight_function,
)
from .graph import Graph, NodeKind, cycles, k24, make_graph, validate_graph
from .exact import (
    compose_construction,
    dacp_expand,
    enumerate_stratum,
    exact_partition,
    signed_pairing_mass,
    stratum_mass,
    stratum_masses,
)
from .mcmc import metropolis_step, neighbors, run_chain, sample_even, transition_matrix
from .fpras import approximate_Z, base_case_value, estimate_pairing_probs, split_node
from .amplifier import amplify, contraction_probe, growth_report, lambda_step
from .io import parse_graph, serialize_graph

__all__ = [
    "__version__",
    "BudgetExhausted",
    "EightVertexError",
    "GraphError",
    "Infeasible",
    "InvalidPairing",
    "InvalidPattern",
    "MarginError",
    "NoNonnegativeSolution",
    "RegionError",
    "TooLarge",
    "ZeroWeightState",
    "Pairing",
    "Params",
    "RegionFlags",
    "SignedPairing",
    "WeightFunction",
    "local_weight",
    "pairing_sign",
    "region_classify",
    "solve_congestion_weights",
    "solve_weight_function",
    "Graph",
    "NodeKind",
    "cycles",
    "k24",
    "make_graph",
    "validate_graph",
    "compose_construction",
    "dacp_expand",
    "enumerate_stratum",
    "exact_partition",
    "signed_pairing_mass",
    "stratum_mass",
    "stratum_masses",
    "metropolis_step",
    "neighbors",
    "run_chain",
    "sample_even",
    "transition_matrix",
    "approximate_Z",
    "base_case_value",
    "estimate_pairing_probs",
    "split_node",
    "amplify",
    "contraction_probe",
    "growth_report",
    "lambda_step",
    "parse_graph",
    "serialize_graph",
]
