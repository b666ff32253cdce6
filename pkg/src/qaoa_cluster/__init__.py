"""Maxcut clustering with Bayesian-optimized QAOA on a state-vector simulator."""

from .bayesopt import GpModel, Kernel, OptimizerConfig, matern25, optimize, posterior, propose_next, ucb
from .clustering import BoxDistribution, Dataset, bhattacharyya_coefficient, bicluster, euclidean_distance_matrix, overlap_graph
from .compiler import GateProgram, compile_cost_layer, compile_qaoa, emit_program, parse_program, schedule_edges
from .experiment import (
    ExperimentConfig,
    empirical_cdf,
    emit_outputs,
    ks_significance,
    ks_statistic,
    random_sampling_cdf,
    run_experiment,
    solve_maxcut,
)
from .graphs import WeightedGraph, brute_force_maxcut, cut_cost, ising_energy, random_weights, topology_19q
from .sampling import best_statistic, evaluate_distribution, extreme_value_expectations, order_statistic_pdf
from .statevector import (
    NoiseModel,
    QaoaAngles,
    StateVector,
    apply_cost_unitary,
    apply_driver_unitary,
    prepare_qaoa_state,
    sample_bitstrings,
    uniform_superposition,
)

__version__ = "0.1.0"
