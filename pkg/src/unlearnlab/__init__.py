"""Desk-scale machine-unlearning laboratory.

A self-contained dense-network engine plus fine-grained parameter
perturbation unlearning strategies (top-k, random-k, mixed), layer-wise
baselines (eu-k, cf-k, retrain), evaluation metrics, and an adversarial
unlearning-degree probe.
"""

from .data import Dataset, DatasetSplit, generate_blobs, load_csv, load_idx, save_csv, save_idx, split
from .degree import DegreeConfig, DegreeReport, Generator, evaluate_degree, perturb_data, train_generator, unlearning_degree
from .experiment import ExperimentConfig, config_hash, emit_plot_data, run_experiment
from .metrics import MetricReport, accuracy, acceleration, forgetting_rate, memory_retention_rate, similarity
from .nn import (
    GradientRecord,
    Network,
    ParameterStore,
    backward,
    forward,
    init_random,
    load_checkpoint,
    save_checkpoint,
)
from .optim import OptimizerState, make_optimizer, optimizer_step
from .unlearn import (
    PerturbationPlan,
    SensitivityMap,
    UnlearnConfig,
    UnlearnOutcome,
    gradient_norm_gap,
    js_divergence,
    perturb,
    run_baseline,
    select_mixed,
    select_random_k,
    select_top_k,
    sensitivity,
    unlearn_finetune,
)

__version__ = "0.1.0"
