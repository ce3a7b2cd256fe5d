"""Training-free function approximation with localized Hermite kernels.

The library estimates a function from scattered labeled samples that live
on an unknown low-dimensional set inside a high-dimensional space, using a
single weighted-sum pass with a localized polynomial kernel: no training
loop, no eigen-decomposition, and only the intrinsic dimension as a prior.
The same kernels convert exactly into shallow Gaussian networks, which
compose along DAGs with controlled error propagation.  An experiment
harness reproduces a noisy helix reconstruction study end to end.
"""

from .hermite import (
    HermiteRow,
    QuadratureRule,
    gauss_hermite_rule,
    hermite_matrix,
    hermite_row,
    psi_at_zero,
    quad_integrate,
)
from .kernels import (
    DSequence,
    KernelTable,
    PCoeffs,
    compile_kernel,
    d_sequence,
    eval_kernel,
    filter_h,
    mehler_closed_form,
    p_coeffs,
    phi_localized,
    proj_reduced,
    proj_tensor,
    proj_via_extension,
)
from .estimator import (
    Curve,
    Dataset,
    EstimatorConfig,
    LabeledSample,
    QuadratureConvergenceError,
    continuous_operator_on_curve,
    estimate_at,
    estimate_batch,
    read_dataset_csv,
    write_dataset_csv,
)
from .gaussian_net import (
    GaussianNetwork,
    WeightedPolyCoeffs,
    gaussian_basis_network,
    poly_to_gaussian,
    prefab_kernel_network,
    read_network_json,
    shallow_net_estimate,
    write_network_json,
)
from .deep_net import (
    Dag,
    DagNode,
    PropagationReport,
    build_deep_approx,
    estimate_lipschitz,
    eval_gfunction,
    make_pooling,
    propagation_gap,
    read_dag_json,
    write_dag_json,
)
from .experiments import (
    NOISE_MODELS,
    UNBIAS_FACTOR,
    ExperimentConfig,
    ExperimentReport,
    HelixSpec,
    TrialReport,
    bernstein_demo,
    gen_training,
    heat_kernel_baseline,
    helix_curve,
    helix_target,
    ratio_reconstruction,
    run_experiment,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "HermiteRow",
    "QuadratureRule",
    "gauss_hermite_rule",
    "hermite_matrix",
    "hermite_row",
    "psi_at_zero",
    "quad_integrate",
    "DSequence",
    "KernelTable",
    "PCoeffs",
    "compile_kernel",
    "d_sequence",
    "eval_kernel",
    "filter_h",
    "mehler_closed_form",
    "p_coeffs",
    "phi_localized",
    "proj_reduced",
    "proj_tensor",
    "proj_via_extension",
    "Curve",
    "Dataset",
    "EstimatorConfig",
    "LabeledSample",
    "QuadratureConvergenceError",
    "continuous_operator_on_curve",
    "estimate_at",
    "estimate_batch",
    "read_dataset_csv",
    "write_dataset_csv",
    "GaussianNetwork",
    "WeightedPolyCoeffs",
    "gaussian_basis_network",
    "poly_to_gaussian",
    "prefab_kernel_network",
    "read_network_json",
    "shallow_net_estimate",
    "write_network_json",
    "Dag",
    "DagNode",
    "PropagationReport",
    "build_deep_approx",
    "estimate_lipschitz",
    "eval_gfunction",
    "make_pooling",
    "propagation_gap",
    "read_dag_json",
    "write_dag_json",
    "NOISE_MODELS",
    "UNBIAS_FACTOR",
    "ExperimentConfig",
    "ExperimentReport",
    "HelixSpec",
    "TrialReport",
    "bernstein_demo",
    "gen_training",
    "heat_kernel_baseline",
    "helix_curve",
    "helix_target",
    "ratio_reconstruction",
    "run_experiment",
    "write_report",
    "__version__",
]
