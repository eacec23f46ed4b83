"""Metric machinery over controller space: closed-loop Grammians, the
tangent-to-closed-loop differential maps, the weighted Grammian inner
product, its Gram (coordinate) matrix over a fixed tangent basis, and the
Euclidean/metric gradients of the cost.

The tangent basis ordering is fixed once and shared by every consumer so
that Gram matrices, Hessians and traces are reproducible: the q*q entries
of ``E`` in row-major order, then the q*p entries of ``F``, then the m*q
entries of ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from . import matlin
from .errors import (
    DimensionMismatchError,
    MetricDegenerateError,
    NotMinimalError,
    NotStabilizingError,
)
from .model import Controller, CostState, Plant, TangentDirection, cost_state


@dataclass(frozen=True)
class MetricWeights:
    """Weights of the three Grammian terms of the metric; w1 > 0, w2, w3 >= 0."""

    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.0

    def __post_init__(self):
        if not (self.w1 > 0 and self.w2 >= 0 and self.w3 >= 0):
            raise ValueError(f"need w1 > 0 and w2, w3 >= 0, got {(self.w1, self.w2, self.w3)}")


@dataclass(frozen=True)
class GrammianPair:
    """Controllability and observability Grammians of the closed loop."""

    Wc: np.ndarray
    Wo: np.ndarray


def tangent_dim(q: int, m: int, p: int) -> int:
    return q * q + q * p + m * q


def pack(V: TangentDirection) -> np.ndarray:
    """Coordinates of ``V`` in the fixed basis (E row-major, then F, then G)."""
    return np.concatenate([V.E.ravel(), V.F.ravel(), V.G.ravel()])


def unpack(vec: np.ndarray, q: int, m: int, p: int) -> TangentDirection:
    vec = np.asarray(vec, dtype=float)
    if vec.size != tangent_dim(q, m, p):
        raise ValueError(f"expected {tangent_dim(q, m, p)} coordinates, got {vec.size}")
    e_end = q * q
    f_end = e_end + q * p
    return TangentDirection(
        vec[:e_end].reshape(q, q),
        vec[e_end:f_end].reshape(q, p),
        vec[f_end:].reshape(m, q),
    )


def tangent_basis(q: int, m: int, p: int) -> list[TangentDirection]:
    """Canonical unit directions in the fixed ordering; orthonormal in the
    Frobenius inner product."""
    N = tangent_dim(q, m, p)
    eye = np.eye(N)
    return [unpack(eye[i], q, m, p) for i in range(N)]


def hat_maps(plant: Plant, V: TangentDirection) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Differentials of the closed-loop realization maps along ``V``.

    Returns ``(dA_cl, dB_cl, dC_cl)``: ``dA_cl = [[0, B G], [F C, E]]``,
    ``dB_cl`` carries ``F`` in its lower-right block and ``dC_cl`` carries
    ``G`` in its lower-right block.
    """
    n, m, p = plant.n, plant.m, plant.p
    q = V.E.shape[0]
    if V.F.shape[1] != p or V.G.shape[0] != m:
        raise DimensionMismatchError(
            f"tangent blocks shaped for (m={V.G.shape[0]}, p={V.F.shape[1]}), "
            f"plant has (m={m}, p={p})"
        )
    e_hat = np.zeros((n + q, n + q))
    e_hat[:n, n:] = plant.B @ V.G
    e_hat[n:, :n] = V.F @ plant.C
    e_hat[n:, n:] = V.E
    f_hat = np.zeros((n + q, n + p))
    f_hat[n:, n:] = V.F
    g_hat = np.zeros((p + m, n + q))
    g_hat[p:, n:] = V.G
    return e_hat, f_hat, g_hat


def closed_loop_grammians(
    plant: Plant,
    K: Controller,
    check_pd: bool = True,
    state: CostState | None = None,
) -> GrammianPair:
    """Solve the two closed-loop Grammian Lyapunov equations at ``K``.

    Both Grammians are positive definite exactly when the closed-loop
    realization is minimal; ``check_pd=True`` enforces that via Cholesky.
    Pass ``state`` to reuse an existing factorization of ``A_cl``.
    """
    from .model import assemble_closed_loop

    if state is not None:
        cl, solver = state.closed_loop, state.solver
    else:
        cl = assemble_closed_loop(plant, K)
        solver = matlin.SchurLyapunovSolver(cl.A_cl)
        if solver.abscissa >= 0.0:
            raise NotStabilizingError("controller does not stabilize the plant")
    Wc = solver.solve(cl.B_cl @ cl.B_cl.T)
    Wo = solver.solve_adjoint(cl.C_cl.T @ cl.C_cl)
    if check_pd:
        for name, gram in (("controllability", Wc), ("observability", Wo)):
            try:
                la.cho_factor(gram, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise NotMinimalError(
                    f"closed-loop {name} Grammian is not positive definite"
                ) from exc
    return GrammianPair(Wc=Wc, Wo=Wo)


def km_inner(
    plant: Plant,
    K: Controller,
    weights: MetricWeights,
    V1: TangentDirection,
    V2: TangentDirection,
    grammians: GrammianPair | None = None,
) -> float:
    """Weighted Grammian inner product of two tangent directions at ``K``.

    ``w1 tr[Wo dA1 Wc dA2'] + w2 tr[dB1' Wo dB2] + w3 tr[dC1 Wc dC2']``
    with the hat maps of the two directions.  Pass ``grammians`` to share
    the two Lyapunov solves across many evaluations at the same ``K``.
    """
    if grammians is None:
        grammians = closed_loop_grammians(plant, K)
    Wc, Wo = grammians.Wc, grammians.Wo
    e1, f1, g1 = hat_maps(plant, V1)
    e2, f2, g2 = hat_maps(plant, V2)
    total = weights.w1 * float(np.sum((Wo @ e1 @ Wc) * e2))
    if weights.w2 != 0.0:
        total += weights.w2 * float(np.sum(f1 * (Wo @ f2)))
    if weights.w3 != 0.0:
        total += weights.w3 * float(np.sum((g1 @ Wc) * g2))
    return total


def _hat_basis(plant: Plant, q: int) -> np.ndarray:
    """Stack of dA_cl over the canonical basis, shape (N, n+q, n+q)."""
    n, m, p = plant.n, plant.m, plant.p
    N = tangent_dim(q, m, p)
    out = np.zeros((N, n + q, n + q))
    idx = 0
    for a in range(q):
        for b in range(q):
            out[idx, n + a, n + b] = 1.0
            idx += 1
    for a in range(q):
        for b in range(p):
            out[idx, n + a, :n] = plant.C[b, :]
            idx += 1
    for a in range(m):
        for b in range(q):
            out[idx, :n, n + b] = plant.B[:, a]
            idx += 1
    return out


@dataclass(frozen=True)
class GramMatrix:
    """Metric coordinates over the fixed basis, anchored at a controller.

    ``matrix`` includes any jitter needed to reach a Cholesky-factorizable
    state; ``cho`` is the cached factorization used for metric solves.
    """

    matrix: np.ndarray
    cho: tuple
    controller: Controller
    weights: MetricWeights

    def solve(self, d: np.ndarray) -> np.ndarray:
        return la.cho_solve(self.cho, d, check_finite=False)


def metric_gram_matrix(
    plant: Plant,
    K: Controller,
    weights: MetricWeights,
    grammians: GrammianPair | None = None,
) -> GramMatrix:
    """Assemble the N x N metric coordinate matrix at ``K``.

    Grammians are computed once and shared across all entries.  If the bare
    matrix is not Cholesky-factorizable, escalating jitter ``lam * I`` with
    ``lam = 1e-12 tr(G)/N`` (then x100, x10000) is added before giving up.
    """
    if grammians is None:
        grammians = closed_loop_grammians(plant, K)
    Wc, Wo = grammians.Wc, grammians.Wo
    n, m, p, q = plant.n, plant.m, plant.p, K.q
    hat = _hat_basis(plant, q)
    mid = np.einsum("ab,ibc,cd->iad", Wo, hat, Wc, optimize=True)
    gram = weights.w1 * np.tensordot(mid, hat, axes=([1, 2], [1, 2]))
    e_end = q * q
    f_end = e_end + q * p
    if weights.w2 != 0.0:
        gram[e_end:f_end, e_end:f_end] += weights.w2 * np.kron(Wo[n:, n:], np.eye(p))
    if weights.w3 != 0.0:
        gram[f_end:, f_end:] += weights.w3 * np.kron(np.eye(m), Wc[n:, n:])
    gram = 0.5 * (gram + gram.T)

    N = gram.shape[0]
    jitter = 1e-12 * np.trace(gram) / N
    candidate = gram
    for attempt in range(4):
        try:
            cho = la.cho_factor(candidate, check_finite=False)
            return GramMatrix(matrix=candidate, cho=cho, controller=K, weights=weights)
        except np.linalg.LinAlgError:
            candidate = gram + jitter * np.eye(N)
            jitter *= 100.0
    raise MetricDegenerateError(
        "metric Gram matrix is not positive definite after jitter retries"
    )


def euclidean_gradient(
    plant: Plant, K: Controller, state: CostState | None = None
) -> TangentDirection:
    """Gradient of the cost in the Frobenius metric on the tangent blocks.

    Componentwise this stacks the cost differential over the canonical basis;
    the blocks below evaluate all components from the shared ``(X, Y)`` pair.
    """
    if state is None:
        state = cost_state(plant, K)
    n = plant.n
    X, Y = state.X, state.Y
    YX = Y @ X
    X22 = X[n:, n:]
    Y22 = Y[n:, n:]
    grad_E = 2.0 * YX[n:, n:]
    grad_F = 2.0 * YX[n:, :n] @ plant.C.T + 2.0 * Y22 @ K.B_K @ plant.V
    grad_G = 2.0 * plant.B.T @ YX[:n, n:] + 2.0 * plant.R @ K.C_K @ X22
    return TangentDirection(grad_E, grad_F, grad_G)


def riemannian_gradient(
    plant: Plant,
    K: Controller,
    weights: MetricWeights,
    state: CostState | None = None,
    gram: GramMatrix | None = None,
) -> tuple[TangentDirection, float]:
    """Metric gradient of the cost at ``K`` and its squared metric norm.

    Solves ``G g = d`` for the basis coordinates ``d`` of the differential;
    the returned norm is ``d' G^-1 d``, which equals the metric inner product
    of the gradient with itself.
    """
    if gram is None:
        gram = metric_gram_matrix(plant, K, weights)
    d = pack(euclidean_gradient(plant, K, state))
    g = gram.solve(d)
    norm_sq = float(d @ g)
    return unpack(g, K.q, plant.m, plant.p), max(norm_sq, 0.0)
