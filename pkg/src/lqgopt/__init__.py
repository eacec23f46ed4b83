"""Direct output-feedback controller optimization for linear-quadratic
plants with Gaussian noise, using gradient descent under a coordinate-
invariant Grammian metric, with a plain-gradient baseline, a two-Riccati
oracle, and a comparison harness."""

from .bench import (
    BenchmarkSystem,
    SignatureReport,
    finite_difference_hessian,
    generate_random_plant,
    hessian_signature_check,
    run_experiment,
)
from .geometry import (
    GramMatrix,
    GrammianPair,
    MetricWeights,
    closed_loop_grammians,
    euclidean_gradient,
    hat_maps,
    km_inner,
    metric_gram_matrix,
    riemannian_gradient,
    tangent_basis,
)
from .model import (
    AdmissibilityReport,
    ClosedLoop,
    Controller,
    Plant,
    TangentDirection,
    assemble_closed_loop,
    coordinate_transform,
    cost_differential,
    is_admissible,
    lqg_cost,
    lqg_riccati_optimum,
    state_covariance,
    transform_tangent,
)
from .optimizer import (
    IterationRecord,
    OptimizerConfig,
    RunTrace,
    backtracking_line_search,
    perturb_direction,
    random_minimal_init,
    run_gd,
    run_rgd,
    stability_certificate,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityReport",
    "BenchmarkSystem",
    "ClosedLoop",
    "Controller",
    "GramMatrix",
    "GrammianPair",
    "IterationRecord",
    "MetricWeights",
    "OptimizerConfig",
    "Plant",
    "RunTrace",
    "SignatureReport",
    "TangentDirection",
    "assemble_closed_loop",
    "backtracking_line_search",
    "closed_loop_grammians",
    "coordinate_transform",
    "cost_differential",
    "euclidean_gradient",
    "finite_difference_hessian",
    "generate_random_plant",
    "hat_maps",
    "hessian_signature_check",
    "is_admissible",
    "km_inner",
    "lqg_cost",
    "lqg_riccati_optimum",
    "metric_gram_matrix",
    "perturb_direction",
    "random_minimal_init",
    "riemannian_gradient",
    "run_experiment",
    "run_gd",
    "run_rgd",
    "stability_certificate",
    "state_covariance",
    "tangent_basis",
    "transform_tangent",
]
