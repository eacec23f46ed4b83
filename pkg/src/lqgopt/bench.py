"""Benchmark systems and the comparison harness: random plant generation,
metric-descent-vs-plain-descent runs over a suite, finite-difference
Hessians over the fixed tangent basis, and the Hessian signature check at
the Riccati optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import geometry
from .errors import GenerationFailureError, InvalidPlantError, NotMinimalError
from .geometry import MetricWeights, pack, tangent_basis, tangent_dim
from .model import (
    Controller,
    Plant,
    is_admissible,
    lqg_riccati_optimum,
)
from .optimizer import OptimizerConfig, random_minimal_init, run_gd, run_rgd

#: The three protocol cells compared on every system: the plain-descent
#: baseline and the metric descent under its two standard weight settings.
COMPARISON_CELLS: tuple[tuple[str, MetricWeights | None], ...] = (
    ("gd", None),
    ("rgd_w111", MetricWeights(1.0, 1.0, 1.0)),
    ("rgd_w100", MetricWeights(1.0, 0.0, 0.0)),
)

#: Gap threshold used for the iterations-to-target comparison column
#: (distinct from the much tighter halting rule).
TARGET_GAP = 1e-6


@dataclass(frozen=True)
class BenchmarkSystem:
    """Named plant with provenance and an optional known optimal cost."""

    name: str
    plant: Plant
    note: str = ""
    j_star: float | None = None


def generate_random_plant(
    n: int,
    m: int,
    p: int,
    density: float,
    rng: np.random.Generator,
    max_tries: int = 50,
) -> Plant:
    """Random plant: each entry of (A, B, C) is standard Gaussian with
    probability ``density`` and zero otherwise; identity noise and cost
    weights.  Resamples until the plant assumptions hold."""
    if min(n, m, p) < 1:
        raise ValueError("dimensions must be at least 1")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")

    def draw(rows: int, cols: int) -> np.ndarray:
        vals = rng.standard_normal((rows, cols))
        keep = rng.random((rows, cols)) < density
        return np.where(keep, vals, 0.0)

    for _ in range(max_tries):
        try:
            return Plant(
                A=draw(n, n),
                B=draw(n, m),
                C=draw(p, n),
                W=np.eye(n),
                V=np.eye(p),
                Q=np.eye(n),
                R=np.eye(m),
            )
        except InvalidPlantError:
            continue
    raise GenerationFailureError(
        f"no valid plant in {max_tries} draws for (n={n}, m={m}, p={p}, density={density})"
    )


@dataclass(frozen=True)
class SummaryRow:
    """One (system, algorithm) cell of the comparison summary."""

    system: str
    algorithm: str
    iters_to_target: int | None
    final_gap: float | None
    wall_ms: float
    termination: str


@dataclass(frozen=True)
class ExperimentResult:
    traces: dict
    summary: list[SummaryRow]
    errors: dict


def run_experiment(
    suite: list[BenchmarkSystem],
    config: OptimizerConfig,
    target_gap: float = TARGET_GAP,
) -> ExperimentResult:
    """Run the three comparison cells on every system from a shared start.

    Per system, one starting controller is drawn from a seed derived from
    ``config.seed`` and the system index, so all three cells start at the
    same point.  Per-run failures are recorded and do not abort the suite.
    """
    traces: dict = {}
    summary: list[SummaryRow] = []
    errors: dict = {}
    for idx, system in enumerate(suite):
        plant = system.plant
        if system.j_star is not None:
            j_star = system.j_star
        else:
            _, j_star = lqg_riccati_optimum(plant)
        K0 = random_minimal_init(plant, np.random.default_rng([config.seed, idx]))
        for name, weights in COMPARISON_CELLS:
            if weights is None:
                cell_config = replace(config, algorithm="gd")
                runner = run_gd
            else:
                cell_config = replace(config, algorithm="rgd", weights=weights)
                runner = run_rgd
            try:
                trace = runner(plant, K0, cell_config, j_star)
            except Exception as exc:  # per-run failures stay in the report
                errors[(system.name, name)] = exc
                summary.append(
                    SummaryRow(system.name, name, None, None, 0.0, "Error")
                )
                continue
            traces[(system.name, name)] = trace
            summary.append(
                SummaryRow(
                    system=system.name,
                    algorithm=name,
                    iters_to_target=trace.iters_to_gap(target_gap),
                    final_gap=trace.final_gap,
                    wall_ms=trace.total_wall_ms(),
                    termination=trace.termination,
                )
            )
    return ExperimentResult(traces=traces, summary=summary, errors=errors)


def finite_difference_hessian(
    plant: Plant, K: Controller, h: float | None = None
) -> np.ndarray:
    """Central-difference Hessian of the cost over the fixed tangent basis.

    Column ``j`` differences the analytic gradient coordinates between
    ``K + h E_j`` and ``K - h E_j``; the result is symmetrized.  The default
    step is ``1e-4 (1 + ||K||_F)``.
    """
    if h is None:
        h = 1e-4 * (1.0 + K.frobenius_norm())
    basis = tangent_basis(K.q, plant.m, plant.p)
    N = tangent_dim(K.q, plant.m, plant.p)
    H = np.empty((N, N))
    for j, Ej in enumerate(basis):
        d_plus = pack(geometry.euclidean_gradient(plant, K.retract(Ej, h)))
        d_minus = pack(geometry.euclidean_gradient(plant, K.retract(Ej, -h)))
        H[:, j] = (d_plus - d_minus) / (2.0 * h)
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class SignatureReport:
    """Eigenvalue signs of the cost Hessian at the Riccati optimum.

    ``s_zero`` counts eigenvalues within ``zero_tol * max |eig|`` of zero;
    at a nondegenerate optimum it equals the squared controller order (the
    dimension of the coordinate-change orbit)."""

    eigenvalues: np.ndarray
    s_minus: int
    s_zero: int
    s_plus: int
    n: int
    N: int

    @property
    def signature(self) -> tuple[int, int, int]:
        return (self.s_minus, self.s_zero, self.s_plus)


def hessian_signature_check(
    plant: Plant, h: float | None = None, zero_tol: float = 1e-6
) -> SignatureReport:
    """Finite-difference Hessian signature at the Riccati-optimal controller."""
    K_star, _ = lqg_riccati_optimum(plant)
    report = is_admissible(plant, K_star)
    if not report.minimal:
        raise NotMinimalError("the Riccati-optimal controller is not minimal")
    H = finite_difference_hessian(plant, K_star, h)
    eigs = np.sort(np.linalg.eigvalsh(H))
    threshold = zero_tol * max(np.abs(eigs).max(), 1e-300)
    s_minus = int(np.sum(eigs < -threshold))
    s_zero = int(np.sum(np.abs(eigs) <= threshold))
    s_plus = int(np.sum(eigs > threshold))
    return SignatureReport(
        eigenvalues=eigs,
        s_minus=s_minus,
        s_zero=s_zero,
        s_plus=s_plus,
        n=plant.n,
        N=eigs.size,
    )
