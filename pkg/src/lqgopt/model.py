"""Plant/controller data model, closed-loop assembly, the quadratic
output-feedback cost with its differential, coordinate transformations,
admissibility checks, and the Riccati-based optimal-controller oracle.

Closed-loop conventions, for a plant of dimensions ``(n, m, p)`` and a
dynamic controller ``(A_K, B_K, C_K)`` of order ``q``::

    A_cl = [[A,      B C_K],      B_cl = [[I_n, 0  ],
            [B_K C,  A_K ]]               [0,   B_K]]

    C_cl = [[C, 0  ],             Q_cl = diag(Q, C_K' R C_K)
            [0, C_K]]             W_cl = diag(W, B_K V B_K')

The cost of a stabilizing controller is ``J(K) = tr(Q_cl X)`` with
``X = L(A_cl, W_cl)`` the closed-loop state covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from . import matlin
from .errors import (
    DimensionMismatchError,
    InvalidPlantError,
    NotStabilizingError,
    SingularTransformError,
)

ADMISSIBILITY_TOL = 1e-8


def _matrix(M, name: str, shape: tuple[int, int] | None = None) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise InvalidPlantError(f"{name} contains non-finite entries")
    if shape is not None and M.shape != shape:
        raise DimensionMismatchError(f"{name} must have shape {shape}, got {M.shape}")
    return M


def _psd_sqrt(M: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(M)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


@dataclass(frozen=True)
class PlantCheck:
    """One named plant-assumption check with its outcome."""

    name: str
    ok: bool
    detail: str


def check_plant_data(A, B, C, W, V, Q, R, tol: float = ADMISSIBILITY_TOL) -> list[PlantCheck]:
    """Run every standing plant assumption and report each by name.

    Shape or non-finite problems raise immediately; the remaining checks are
    collected so a report can show all violations at once.
    """
    A = _matrix(A, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError("A must be square")
    B = _matrix(B, "B")
    C = _matrix(C, "C")
    if B.shape[0] != n:
        raise DimensionMismatchError(f"B must have {n} rows, got {B.shape}")
    if C.shape[1] != n:
        raise DimensionMismatchError(f"C must have {n} columns, got {C.shape}")
    m, p = B.shape[1], C.shape[0]
    W = _matrix(W, "W", (n, n))
    V = _matrix(V, "V", (p, p))
    Q = _matrix(Q, "Q", (n, n))
    R = _matrix(R, "R", (m, m))

    checks: list[PlantCheck] = []

    def sym_psd(M, name, strict):
        asym = np.abs(M - M.T).max(initial=0.0)
        scale = max(np.abs(M).max(initial=0.0), 1e-300)
        if asym > matlin.SYMMETRY_TOL * scale:
            checks.append(PlantCheck(f"{name} symmetric", False, f"asymmetry {asym:.3e}"))
            return
        checks.append(PlantCheck(f"{name} symmetric", True, ""))
        eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
        bound = tol * max(1.0, eigs.max(initial=0.0))
        if strict:
            ok = eigs.min() > bound
            checks.append(
                PlantCheck(f"{name} positive definite", ok, f"min eigenvalue {eigs.min():.3e}")
            )
        else:
            ok = eigs.min() >= -bound
            checks.append(
                PlantCheck(f"{name} positive semidefinite", ok, f"min eigenvalue {eigs.min():.3e}")
            )

    sym_psd(W, "W", strict=False)
    sym_psd(V, "V", strict=True)
    sym_psd(Q, "Q", strict=False)
    sym_psd(R, "R", strict=True)

    checks.append(
        PlantCheck("(A, B) controllable", matlin.is_controllable(A, B, tol), "")
    )
    checks.append(
        PlantCheck(
            "(A, W^1/2) controllable",
            matlin.is_controllable(A, _psd_sqrt(0.5 * (W + W.T)), tol),
            "",
        )
    )
    checks.append(PlantCheck("(A, C) observable", matlin.is_observable(A, C, tol), ""))
    checks.append(
        PlantCheck(
            "(A, Q^1/2) observable",
            matlin.is_observable(A, _psd_sqrt(0.5 * (Q + Q.T)), tol),
            "",
        )
    )
    return checks


@dataclass(frozen=True)
class Plant:
    """Continuous-time plant with noise and cost data.

    Fields are ``(A, B, C)`` of dimensions ``(n, m, p)``, process and
    measurement noise covariances ``(W, V)``, and state/control cost
    weights ``(Q, R)``.  All standing assumptions are verified once at
    construction; instances are immutable afterwards.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        checks = check_plant_data(self.A, self.B, self.C, self.W, self.V, self.Q, self.R)
        failed = [c.name for c in checks if not c.ok]
        if failed:
            raise InvalidPlantError("plant assumption(s) violated: " + "; ".join(failed))
        for name in ("A", "B", "C"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("W", "V", "Q", "R"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            arr = 0.5 * (arr + arr.T)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class Controller:
    """Dynamic output-feedback controller ``(A_K, B_K, C_K)`` of order q."""

    A_K: np.ndarray
    B_K: np.ndarray
    C_K: np.ndarray

    def __post_init__(self):
        A_K = np.atleast_2d(np.asarray(self.A_K, dtype=float))
        q = A_K.shape[0]
        if A_K.shape != (q, q):
            raise DimensionMismatchError("A_K must be square")
        B_K = np.atleast_2d(np.asarray(self.B_K, dtype=float))
        C_K = np.atleast_2d(np.asarray(self.C_K, dtype=float))
        if B_K.shape[0] != q or C_K.shape[1] != q:
            raise DimensionMismatchError(
                f"controller blocks disagree on order: A_K {A_K.shape}, "
                f"B_K {B_K.shape}, C_K {C_K.shape}"
            )
        for name, arr in (("A_K", A_K), ("B_K", B_K), ("C_K", C_K)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def q(self) -> int:
        return self.A_K.shape[0]

    def block(self) -> np.ndarray:
        """The (m+q) x (p+q) block form [[0, C_K], [B_K, A_K]]."""
        m, q = self.C_K.shape[0], self.q
        p = self.B_K.shape[1]
        out = np.zeros((m + q, p + q))
        out[:m, p:] = self.C_K
        out[m:, :p] = self.B_K
        out[m:, p:] = self.A_K
        return out

    def retract(self, direction: "TangentDirection", step: float = 1.0) -> "Controller":
        """Straight-line retraction ``K + step * direction``."""
        return Controller(
            self.A_K + step * direction.E,
            self.B_K + step * direction.F,
            self.C_K + step * direction.G,
        )

    def frobenius_norm(self) -> float:
        return float(
            np.sqrt(
                np.sum(self.A_K**2) + np.sum(self.B_K**2) + np.sum(self.C_K**2)
            )
        )


@dataclass(frozen=True)
class TangentDirection:
    """Tangent block triple ``(E, F, G)`` matching a controller of order q."""

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        G = np.atleast_2d(np.asarray(self.G, dtype=float))
        q = E.shape[0]
        if E.shape != (q, q) or F.shape[0] != q or G.shape[1] != q:
            raise DimensionMismatchError(
                f"tangent blocks disagree on order: E {E.shape}, F {F.shape}, G {G.shape}"
            )
        for name, arr in (("E", E), ("F", F), ("G", G)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def scaled(self, c: float) -> "TangentDirection":
        return TangentDirection(c * self.E, c * self.F, c * self.G)

    def plus(self, other: "TangentDirection", c: float = 1.0) -> "TangentDirection":
        return TangentDirection(
            self.E + c * other.E, self.F + c * other.F, self.G + c * other.G
        )

    def frobenius_norm(self) -> float:
        return float(
            np.sqrt(np.sum(self.E**2) + np.sum(self.F**2) + np.sum(self.G**2))
        )

    def dot(self, other: "TangentDirection") -> float:
        return float(
            np.sum(self.E * other.E) + np.sum(self.F * other.F) + np.sum(self.G * other.G)
        )

    @staticmethod
    def zero(q: int, m: int, p: int) -> "TangentDirection":
        return TangentDirection(np.zeros((q, q)), np.zeros((q, p)), np.zeros((m, q)))


@dataclass(frozen=True)
class ClosedLoop:
    """Realized plant/controller interconnection.

    ``D_cl`` is carried for completeness of the realization and is unused by
    every operation in this package.
    """

    A_cl: np.ndarray
    B_cl: np.ndarray
    C_cl: np.ndarray
    D_cl: np.ndarray
    Q_cl: np.ndarray
    W_cl: np.ndarray


def assemble_closed_loop(plant: Plant, K: Controller) -> ClosedLoop:
    """Build the closed-loop realization and cost/noise blocks for (plant, K)."""
    n, m, p = plant.n, plant.m, plant.p
    if K.B_K.shape[1] != p or K.C_K.shape[0] != m:
        raise DimensionMismatchError(
            f"controller shaped for (m={K.C_K.shape[0]}, p={K.B_K.shape[1]}), "
            f"plant has (m={m}, p={p})"
        )
    q = K.q
    A_cl = np.block([[plant.A, plant.B @ K.C_K], [K.B_K @ plant.C, K.A_K]])
    B_cl = np.zeros((n + q, n + p))
    B_cl[:n, :n] = np.eye(n)
    B_cl[n:, n:] = K.B_K
    C_cl = np.zeros((p + m, n + q))
    C_cl[:p, :n] = plant.C
    C_cl[p:, n:] = K.C_K
    D_cl = np.zeros((p + m, n + p))
    D_cl[:p, n:] = np.eye(p)
    Q_cl = la.block_diag(plant.Q, K.C_K.T @ plant.R @ K.C_K)
    W_cl = la.block_diag(plant.W, K.B_K @ plant.V @ K.B_K.T)
    return ClosedLoop(A_cl, B_cl, C_cl, D_cl, Q_cl, W_cl)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of the stabilizing/minimal membership test for a controller."""

    stabilizing: bool
    minimal: bool
    spectral_abscissa: float
    min_sv_ctrb: float
    min_sv_obsv: float


def is_admissible(plant: Plant, K: Controller, tol: float = ADMISSIBILITY_TOL) -> AdmissibilityReport:
    """Check closed-loop stability and minimality of the controller realization.

    Minimality is evaluated on ``(A_K, B_K)`` and ``(A_K, C_K)``; exactly-zero
    ``B_K`` or ``C_K`` reports ``minimal=False`` rather than erroring.
    """
    cl = assemble_closed_loop(plant, K)
    abscissa = matlin.spectral_abscissa(cl.A_cl)
    smin_c, smax_c = matlin.rank_margin(matlin.controllability_matrix(K.A_K, K.B_K))
    smin_o, smax_o = matlin.rank_margin(matlin.observability_matrix(K.A_K, K.C_K))
    minimal = smin_c > tol * max(1.0, smax_c) and smin_o > tol * max(1.0, smax_o)
    return AdmissibilityReport(
        stabilizing=bool(abscissa < 0.0),
        minimal=bool(minimal),
        spectral_abscissa=abscissa,
        min_sv_ctrb=smin_c,
        min_sv_obsv=smin_o,
    )


@dataclass(frozen=True)
class CostState:
    """Shared per-controller quantities: closed loop, X, Y, and the cost.

    ``X`` solves ``A_cl X + X A_cl' = -W_cl`` (state covariance) and ``Y``
    solves the adjoint equation ``A_cl' Y + Y A_cl = -Q_cl``; both are reused
    by the differential and the gradient.  ``solver`` holds the Schur
    factorization of ``A_cl`` for further solves at the same controller.
    """

    closed_loop: ClosedLoop
    X: np.ndarray
    Y: np.ndarray
    cost: float
    solver: matlin.SchurLyapunovSolver


def cost_state(plant: Plant, K: Controller) -> CostState:
    cl = assemble_closed_loop(plant, K)
    solver = matlin.SchurLyapunovSolver(cl.A_cl)
    if solver.abscissa >= 0.0:
        raise NotStabilizingError("controller does not stabilize the plant")
    X = solver.solve(cl.W_cl)
    Y = solver.solve_adjoint(cl.Q_cl)
    return CostState(cl, X, Y, float(np.sum(cl.Q_cl * X)), solver)


def state_covariance(plant: Plant, K: Controller) -> np.ndarray:
    """Closed-loop state covariance ``X = L(A_cl, W_cl)`` of a stabilizing K."""
    cl = assemble_closed_loop(plant, K)
    if matlin.spectral_abscissa(cl.A_cl) >= 0.0:
        raise NotStabilizingError("controller does not stabilize the plant")
    return matlin.solve_lyapunov(cl.A_cl, cl.W_cl)


def lqg_cost(plant: Plant, K: Controller) -> float:
    """Quadratic cost ``tr(Q_cl X)`` of a stabilizing controller."""
    cl = assemble_closed_loop(plant, K)
    if matlin.spectral_abscissa(cl.A_cl) >= 0.0:
        raise NotStabilizingError("controller does not stabilize the plant")
    X = matlin.solve_lyapunov(cl.A_cl, cl.W_cl)
    return float(np.sum(cl.Q_cl * X))


def _d_a_cl(plant: Plant, V: TangentDirection) -> np.ndarray:
    # dA_cl(V) = [[0, B G], [F C, E]]
    n, q = plant.n, V.E.shape[0]
    out = np.zeros((n + q, n + q))
    out[:n, n:] = plant.B @ V.G
    out[n:, :n] = V.F @ plant.C
    out[n:, n:] = V.E
    return out


def cost_differential(
    plant: Plant, K: Controller, V: TangentDirection, state: CostState | None = None
) -> float:
    """Directional derivative of the cost at ``K`` along ``V``.

    Evaluated through the adjoint identity
    ``tr(Q_cl dX) = tr(Y (dA_cl X + X dA_cl' + dW_cl))``, which reuses the
    two Lyapunov solutions ``(X, Y)`` across any number of directions.
    """
    if state is None:
        state = cost_state(plant, K)
    X, Y = state.X, state.Y
    n = plant.n
    X22 = X[n:, n:]
    Y22 = Y[n:, n:]
    dQ22 = V.G.T @ plant.R @ K.C_K
    dQ22 = dQ22 + dQ22.T
    dW22 = V.F @ plant.V @ K.B_K.T
    dW22 = dW22 + dW22.T
    Ehat = _d_a_cl(plant, V)
    XY = X @ Y
    return float(np.sum(dQ22 * X22) + 2.0 * np.sum(Ehat * XY.T) + np.sum(dW22 * Y22))


def cost_differential_nested(plant: Plant, K: Controller, V: TangentDirection) -> float:
    """Oracle form of the differential: one nested Lyapunov differential.

    Kept independent of :func:`cost_differential` so the two routes can be
    checked against each other.
    """
    cl = assemble_closed_loop(plant, K)
    if matlin.spectral_abscissa(cl.A_cl) >= 0.0:
        raise NotStabilizingError("controller does not stabilize the plant")
    n, q = plant.n, K.q
    X = matlin.solve_lyapunov(cl.A_cl, cl.W_cl)
    dQ22 = V.G.T @ plant.R @ K.C_K
    dQ_cl = la.block_diag(np.zeros((n, n)), dQ22 + dQ22.T)
    dW22 = V.F @ plant.V @ K.B_K.T
    dW_cl = la.block_diag(np.zeros((n, n)), dW22 + dW22.T)
    dX = matlin.lyapunov_differential(cl.A_cl, cl.W_cl, _d_a_cl(plant, V), dW_cl)
    return float(np.sum(dQ_cl * X) + np.sum(cl.Q_cl * dX))


def coordinate_transform(K: Controller, S: np.ndarray, cond_limit: float = 1e12) -> Controller:
    """Similarity change of controller coordinates: ``(S A_K S^-1, S B_K, C_K S^-1)``."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape != (K.q, K.q):
        raise DimensionMismatchError(f"S must be {K.q} x {K.q}, got {S.shape}")
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) >= cond_limit:
        raise SingularTransformError("transform matrix is singular or near-singular")
    Si = np.linalg.inv(S)
    return Controller(S @ K.A_K @ Si, S @ K.B_K, K.C_K @ Si)


def transform_tangent(V: TangentDirection, S: np.ndarray, cond_limit: float = 1e12) -> TangentDirection:
    """Pushforward of a tangent triple under the coordinate change by ``S``.

    The transformation is linear in ``K``, so the pushforward applies the
    same block formula to ``(E, F, G)``.
    """
    q = V.E.shape[0]
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape != (q, q):
        raise DimensionMismatchError(f"S must be {q} x {q}, got {S.shape}")
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) >= cond_limit:
        raise SingularTransformError("transform matrix is singular or near-singular")
    Si = np.linalg.inv(S)
    return TangentDirection(S @ V.E @ Si, S @ V.F, V.G @ Si)


def lqg_riccati_optimum(plant: Plant) -> tuple[Controller, float]:
    """Classical two-Riccati optimal controller and its cost.

    Returns the observer-based controller
    ``A_K = A - B F_g - L C``, ``B_K = L``, ``C_K = -F_g`` with
    ``F_g = R^-1 B' P`` and ``L = Sigma C' V^-1``, where ``P`` and ``Sigma``
    solve the control and filter Riccati equations, together with the optimal
    cost ``tr(P W) + tr(P B R^-1 B' P Sigma)``.
    """
    P = matlin.solve_care(plant.A, plant.B, plant.Q, plant.R)
    Sigma = matlin.solve_care(plant.A.T, plant.C.T, plant.W, plant.V)
    F_g = np.linalg.solve(plant.R, plant.B.T @ P)
    L = Sigma @ plant.C.T @ np.linalg.inv(plant.V)
    K = Controller(plant.A - plant.B @ F_g - L @ plant.C, L, -F_g)
    j_star = float(np.trace(P @ plant.W) + np.trace(P @ plant.B @ F_g @ Sigma))
    return K, j_star
