"""Gradient coding that uses the work of partial stragglers."""

from .assignment import (AssignmentMatrix, RegularGraphSpec, build_cyclic, build_regular_graph,
                         find_ramanujan_graph, second_eigenvalue)
from .encoding import (GradientSet, build_indeterminate_mask, compression_matrix, condition_number,
                       coverage, decode, encode_gradient, min_norm_least_squares, residual_error,
                       solve_encoding, solve_worker_coefficients, theoretical_error)
from .lagrange import LagrangeTrial, lagrange_roundtrip_error
from .ordering import (MatchingDecomposition, OrderingMatrix, chunk_ordering, find_perfect_matching,
                       q_max, q_value, random_ordering)
from .simulator import SimConfig, TrialMetrics, aggregate, run_approx_trial, run_exact_trial

__version__ = "0.1.0"
