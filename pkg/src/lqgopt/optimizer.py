"""First-order descent over admissible output-feedback controllers.

Two variants share one backtracking step rule: metric descent (the gradient
from :mod:`lqgopt.geometry` under the weighted Grammian metric, stopping on
its metric norm) and plain gradient descent (Frobenius gradient and norm).
A run records one :class:`IterationRecord` per iterate and stops on gradient
tolerance, on an absolute optimality gap when an oracle value is supplied,
on the iteration cap, or when the step size underflows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry, matlin
from .errors import (
    InadmissibleStartError,
    InitFailureError,
    LqgoptError,
    NotStabilizingError,
    PlacementFailureError,
    StepSizeUnderflowError,
    ZeroDirectionError,
)
from .geometry import MetricWeights
from .model import (
    ADMISSIBILITY_TOL,
    Controller,
    Plant,
    TangentDirection,
    assemble_closed_loop,
    cost_state,
    is_admissible,
    lqg_cost,
)

ALGORITHMS = ("rgd", "gd")

#: Run-termination labels, mirrored verbatim into trace output.
TERMINATION_GRAD_TOL = "GradTol"
TERMINATION_HALT_GAP = "HaltGap"
TERMINATION_MAX_ITERS = "MaxIters"
TERMINATION_STEP_UNDERFLOW = "StepUnderflow"
TERMINATION_ERROR = "Error"


@dataclass(frozen=True)
class OptimizerConfig:
    """Descent parameters; defaults follow the experimental protocol."""

    algorithm: str = "rgd"
    weights: MetricWeights = field(default_factory=MetricWeights)
    max_iters: int = 10_000
    grad_tol: float = 1e-6
    armijo: float = 0.01
    backtrack: float = 0.5
    init_step: float = 1.0
    halt_gap: float | None = 1e-10
    seed: int = 0
    perturb_scale: float = 1e-8

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if not self.init_step > 0:
            raise ValueError("init_step must be positive")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.halt_gap is not None and not self.halt_gap > 0:
            raise ValueError("halt_gap must be positive when given")
        if self.perturb_scale < 0:
            raise ValueError("perturb_scale must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    """Per-iterate trace entry.

    ``grad_norm`` is the metric norm for the metric algorithm and the
    Frobenius norm for plain descent.  ``step`` is the step accepted at this
    iterate (0.0 on the terminal record).  ``gap`` is ``cost - j_star`` when
    an oracle value was available.
    """

    iter: int
    cost: float
    grad_norm: float
    step: float
    gap: float | None
    wall_ms: float


@dataclass(frozen=True)
class RunTrace:
    """Complete record of one descent run."""

    records: list[IterationRecord]
    termination: str
    final: Controller

    @property
    def final_cost(self) -> float:
        return self.records[-1].cost

    @property
    def final_gap(self) -> float | None:
        return self.records[-1].gap

    def iters_to_gap(self, target: float) -> int | None:
        """First iteration index whose gap is at or below ``target``."""
        for rec in self.records:
            if rec.gap is not None and rec.gap <= target:
                return rec.iter
        return None

    def total_wall_ms(self) -> float:
        return float(sum(rec.wall_ms for rec in self.records))


def stability_certificate(plant: Plant, K: Controller, V: TangentDirection) -> float:
    """Guaranteed stability radius along ``V``: every ``K + tV`` with
    ``t`` in ``[0, s)`` keeps the closed loop Hurwitz.

    ``s = 1 / (2 ||dA_cl(V)||_2 lambda_max(L(A_cl, I)))``; returns ``inf``
    when the direction does not move the closed-loop matrix at all.
    """
    cl = assemble_closed_loop(plant, K)
    if matlin.spectral_abscissa(cl.A_cl) >= 0.0:
        raise NotStabilizingError("certificate requires a stabilizing controller")
    if V.frobenius_norm() == 0.0:
        raise ZeroDirectionError("certificate requires a nonzero direction")
    e_hat, _, _ = geometry.hat_maps(plant, V)
    move = matlin.spectral_norm(e_hat)
    if move == 0.0:
        return float("inf")
    P = matlin.solve_lyapunov(cl.A_cl, np.eye(cl.A_cl.shape[0]))
    lam_max = float(np.linalg.eigvalsh(P).max())
    return 1.0 / (2.0 * move * lam_max)


def perturb_direction(
    V: TangentDirection, eta: float, rng: np.random.Generator
) -> TangentDirection:
    """Add Gaussian noise of Frobenius norm exactly ``eta * ||V||_F`` to ``V``."""
    if eta == 0.0:
        return V
    q, p = V.F.shape
    m = V.G.shape[0]
    noise = TangentDirection(
        rng.standard_normal((q, q)),
        rng.standard_normal((q, p)),
        rng.standard_normal((m, q)),
    )
    scale = eta * V.frobenius_norm() / noise.frobenius_norm()
    return V.plus(noise, scale)


def backtracking_line_search(
    plant: Plant,
    K: Controller,
    direction: TangentDirection,
    norm_sq: float,
    config: OptimizerConfig,
    rng: np.random.Generator,
    cost_at_k: float | None = None,
    max_halvings: int = 100,
    max_perturbs: int = 10,
) -> tuple[float, Controller, float]:
    """Shrink the step until ``K + s * direction`` is admissible and the
    decrease beats ``armijo * s * norm_sq``.

    ``direction`` is the (negative-gradient) descent direction and
    ``norm_sq`` its squared norm in the algorithm's metric.  A candidate that
    is stabilizing but lands exactly on a non-minimal controller triggers a
    tiny direction perturbation instead of a halving (non-minimal landings
    are isolated points on the ray); numerical failures near the stability
    boundary count as inadmissible and halve.  Returns the accepted step, the
    accepted controller, and its cost.
    """
    if cost_at_k is None:
        cost_at_k = lqg_cost(plant, K)
    V = direction
    s = config.init_step
    halvings = 0
    perturbs = 0
    tol = ADMISSIBILITY_TOL
    while True:
        candidate = K.retract(V, s)
        cl = assemble_closed_loop(plant, candidate)
        cost_candidate = float("inf")
        minimal = False
        try:
            solver = matlin.SchurLyapunovSolver(cl.A_cl)
            if solver.abscissa < 0.0:
                cost_candidate = float(np.sum(cl.Q_cl * solver.solve(cl.W_cl)))
        except LqgoptError:
            # solver failure near the stability boundary: same treatment as
            # an inadmissible candidate
            pass
        decrease_ok = (
            np.isfinite(cost_candidate)
            and cost_at_k - cost_candidate >= config.armijo * s * norm_sq
        )
        if decrease_ok:
            smin_c, smax_c = matlin.rank_margin(
                matlin.controllability_matrix(candidate.A_K, candidate.B_K)
            )
            smin_o, smax_o = matlin.rank_margin(
                matlin.observability_matrix(candidate.A_K, candidate.C_K)
            )
            minimal = smin_c > tol * max(1.0, smax_c) and smin_o > tol * max(1.0, smax_o)
            if minimal:
                return s, candidate, cost_candidate
            if perturbs < max_perturbs:
                # landed exactly on a non-minimal controller: nudge the
                # direction rather than shrinking (such landings are isolated
                # points on the ray)
                V = perturb_direction(V, config.perturb_scale, rng)
                perturbs += 1
                continue
        halvings += 1
        if halvings >= max_halvings:
            raise StepSizeUnderflowError(
                f"no acceptable step after {max_halvings} halvings from {config.init_step}"
            )
        s *= config.backtrack


def random_minimal_init(plant: Plant, rng: np.random.Generator, max_tries: int = 20) -> Controller:
    """Admissible full-order start: observer-based controller built from
    random gain and observer pole placement, poles i.i.d. uniform in (-2, -1)."""
    for _ in range(max_tries):
        gain_poles = rng.uniform(-2.0, -1.0, plant.n)
        obs_poles = rng.uniform(-2.0, -1.0, plant.n)
        try:
            F_g = matlin.place_poles(plant.A, plant.B, gain_poles, rng)
            L = matlin.place_poles(plant.A.T, plant.C.T, obs_poles, rng).T
        except PlacementFailureError:
            continue
        K = Controller(plant.A - plant.B @ F_g - L @ plant.C, L, -F_g)
        report = is_admissible(plant, K)
        if report.stabilizing and report.minimal:
            return K
    raise InitFailureError(f"no admissible start within {max_tries} attempts")


def _descend(
    plant: Plant,
    K0: Controller,
    config: OptimizerConfig,
    j_star: float | None,
    use_metric: bool,
) -> RunTrace:
    report = is_admissible(plant, K0)
    if not (report.stabilizing and report.minimal):
        raise InadmissibleStartError(
            f"starting controller is not admissible (stabilizing={report.stabilizing}, "
            f"minimal={report.minimal})"
        )
    rng = np.random.default_rng(config.seed)
    records: list[IterationRecord] = []
    K = K0
    termination = TERMINATION_ERROR
    for t in range(config.max_iters + 1):
        tic = time.perf_counter()
        state = cost_state(plant, K)
        cost = state.cost
        if use_metric:
            grammians = geometry.closed_loop_grammians(plant, K, state=state)
            gram = geometry.metric_gram_matrix(plant, K, config.weights, grammians)
            grad, norm_sq = geometry.riemannian_gradient(
                plant, K, config.weights, state, gram
            )
        else:
            grad = geometry.euclidean_gradient(plant, K, state)
            norm_sq = grad.dot(grad)
        grad_norm = float(np.sqrt(max(norm_sq, 0.0)))
        gap = None if j_star is None else cost - j_star

        def close(step: float) -> IterationRecord:
            return IterationRecord(
                iter=t,
                cost=cost,
                grad_norm=grad_norm,
                step=step,
                gap=gap,
                wall_ms=(time.perf_counter() - tic) * 1e3,
            )

        if gap is not None and config.halt_gap is not None and gap < config.halt_gap:
            records.append(close(0.0))
            termination = TERMINATION_HALT_GAP
            break
        if grad_norm < config.grad_tol:
            records.append(close(0.0))
            termination = TERMINATION_GRAD_TOL
            break
        if t == config.max_iters:
            records.append(close(0.0))
            termination = TERMINATION_MAX_ITERS
            break
        try:
            step, K, _ = backtracking_line_search(
                plant, K, grad.scaled(-1.0), norm_sq, config, rng, cost
            )
        except StepSizeUnderflowError:
            records.append(close(0.0))
            termination = TERMINATION_STEP_UNDERFLOW
            break
        records.append(close(step))
    return RunTrace(records=records, termination=termination, final=K)


def run_rgd(
    plant: Plant, K0: Controller, config: OptimizerConfig, j_star: float | None = None
) -> RunTrace:
    """Metric descent from ``K0``; stopping norm is the metric norm."""
    return _descend(plant, K0, replace(config, algorithm="rgd"), j_star, use_metric=True)


def run_gd(
    plant: Plant, K0: Controller, config: OptimizerConfig, j_star: float | None = None
) -> RunTrace:
    """Plain gradient descent baseline; stopping norm is the Frobenius norm."""
    return _descend(plant, K0, replace(config, algorithm="gd"), j_star, use_metric=False)


def run(plant: Plant, K0: Controller, config: OptimizerConfig, j_star: float | None = None) -> RunTrace:
    """Dispatch on ``config.algorithm``."""
    if config.algorithm == "rgd":
        return run_rgd(plant, K0, config, j_star)
    return run_gd(plant, K0, config, j_star)
