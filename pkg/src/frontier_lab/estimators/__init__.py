from .constants import REFERENCE, ReferenceConstants, intersection_exponent, lambda_of_k
from .experiments import (DEFAULT_CONFIGS, EXPERIMENTS, ExperimentResult, bad_disk_experiment,
                          coupling_experiment, crossing_tail_experiment, crossing_tail_experiments,
                          default_config, frontier_dimension_experiment,
                          frontier_disk_ratio_experiment, green_shape_experiment,
                          occupation_stability_experiment, one_arm_experiment,
                          two_arm_experiment, two_point_experiment)
from .fitting import ExponentFit, fit_exponent
from .harness import (ExperimentConfig, ProbabilityEstimate, estimate_probability, run_samples,
                      run_sums, wilson_interval)

__all__ = [
    "REFERENCE", "ReferenceConstants", "intersection_exponent", "lambda_of_k",
    "DEFAULT_CONFIGS", "EXPERIMENTS", "ExperimentResult", "bad_disk_experiment",
    "coupling_experiment", "crossing_tail_experiment", "crossing_tail_experiments",
    "default_config", "frontier_dimension_experiment", "frontier_disk_ratio_experiment",
    "green_shape_experiment", "occupation_stability_experiment", "one_arm_experiment",
    "two_arm_experiment", "two_point_experiment", "ExponentFit", "fit_exponent",
    "ExperimentConfig", "ProbabilityEstimate", "estimate_probability", "run_samples",
    "run_sums", "wilson_interval",
]
