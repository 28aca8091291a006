"""Randomized block-coordinate proximal gradient solvers with importance
sampling, for sparse (possibly non-convex) regularized linear models."""

from .blocks import (BlockPartition, FlopCounter, TraceRecord, block_slice,
                     charge_flops, make_uniform_partition, read_trace,
                     write_trace)
from .datasets import (LabeledDataset, ToySpec, classification_rate,
                       generate_toy, load_libsvm, save_libsvm, standardize,
                       train_test_split)
from .losses import (DesignMatrix, LogisticLoss, PredictionCache, SmoothLoss,
                     full_gradient, loss_value, partial_gradient, update_cache)
from .penalties import (DCPenalty, L1Penalty, LogSumPenalty, block_violation,
                        coordinate_violation, penalty_value, prox)
from .problem import DesignProblem, exact_block_violations, objective_value
from .sampling import (BlockSelector, CyclicSelector, ImportanceSelector,
                       SamplingDistribution, UniformSelector, ViolationVector,
                       cyclic_next, importance_probabilities, init_violations,
                       sample_block, update_violation)
from .solver import (SolveResult, SolverConfig, bb_step_update,
                     compute_exact_violation, gist_solve, rbcd_solve,
                     sufficient_decrease_test)

__version__ = "0.1.0"

__all__ = [
    "BlockPartition", "FlopCounter", "TraceRecord", "block_slice",
    "charge_flops", "make_uniform_partition", "read_trace", "write_trace",
    "LabeledDataset", "ToySpec", "classification_rate", "generate_toy",
    "load_libsvm", "save_libsvm", "standardize", "train_test_split",
    "DesignMatrix", "LogisticLoss", "PredictionCache", "SmoothLoss",
    "full_gradient", "loss_value", "partial_gradient", "update_cache",
    "DCPenalty", "L1Penalty", "LogSumPenalty", "block_violation",
    "coordinate_violation", "penalty_value", "prox",
    "DesignProblem", "exact_block_violations", "objective_value",
    "BlockSelector", "CyclicSelector", "ImportanceSelector",
    "SamplingDistribution", "UniformSelector", "ViolationVector",
    "cyclic_next", "importance_probabilities", "init_violations",
    "sample_block", "update_violation",
    "SolveResult", "SolverConfig", "bb_step_update",
    "compute_exact_violation", "gist_solve", "rbcd_solve",
    "sufficient_decrease_test",
]
