"""Exact and sampled experiments for two-spin systems on small graphs."""
from .errors import SpinlabError
from .graph_core import Graph, build_graph, generate, load_graph, saw_tree
from .spin_model import EventFamily, Pinning, RandomClusterParams, SpinParams, SpinSystem
from .exact_oracle import DistTable, TransitionMatrix, gibbs, spectral_gap, transition_matrix
from .dynamics import ChainSpec, Trajectory, run_chain
from .tree_analysis import build_control_function, critical_lambda, lambda_for_slack, uniqueness
from .stability_lab import BoundReport, coupling_independence_exact, sw_gap_lower_bound
from .lower_bound_lab import LowerBoundRun, run_lower_bound_experiment, truncated_lower_sum

__version__ = "0.1.0"

__all__ = [
    "SpinlabError", "Graph", "build_graph", "generate", "load_graph", "saw_tree",
    "EventFamily", "Pinning", "RandomClusterParams", "SpinParams", "SpinSystem",
    "DistTable", "TransitionMatrix", "gibbs", "spectral_gap", "transition_matrix",
    "ChainSpec", "Trajectory", "run_chain",
    "build_control_function", "critical_lambda", "lambda_for_slack", "uniqueness",
    "BoundReport", "coupling_independence_exact", "sw_gap_lower_bound",
    "LowerBoundRun", "run_lower_bound_experiment", "truncated_lower_sum",
]
