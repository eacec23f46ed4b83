"""Dense real-matrix kernels: Lyapunov/Riccati solvers, stability and
minimality tests, pole placement, and SPD solves.

All routines operate on plain ``numpy`` arrays, are pure functions of their
inputs, and enforce explicit residual contracts so that alternative backends
remain interchangeable.  Tolerances are relative to ``max(1, scale)`` of the
input so the kernels behave uniformly on tiny and large instances.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

from .errors import (
    DimensionMismatchError,
    EigenFailureError,
    NoStabilizingSolutionError,
    NotHurwitzError,
    NotPositiveDefiniteError,
    NumericalFailureError,
    PlacementFailureError,
)

#: Relative rank tolerance of the controllability/observability tests.
RANK_TOL = 1e-8

#: Relative residual bound enforced by solve_lyapunov, solve_care, spd_solve.
RESIDUAL_TOL = 1e-10

#: Relative asymmetry admitted before a "symmetric" argument is rejected.
SYMMETRY_TOL = 1e-12

#: Dimension up to which Lyapunov equations go through the Kronecker solve.
KRON_MAX_DIM = 20


def _as_square(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def symmetrize(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate near-symmetry of ``M`` and return its symmetric part.

    The asymmetry ``max|M - M^T|`` must not exceed ``SYMMETRY_TOL`` times the
    largest absolute entry of ``M``.
    """
    M = _as_square(M, name)
    scale = np.abs(M).max(initial=0.0)
    asym = np.abs(M - M.T).max(initial=0.0)
    if asym > SYMMETRY_TOL * max(scale, 1e-300):
        raise ValueError(f"{name} is not symmetric: asymmetry {asym:.3e} at scale {scale:.3e}")
    return 0.5 * (M + M.T)


def spectral_abscissa(M: np.ndarray) -> float:
    """Largest real part over the eigenvalues of ``M``."""
    M = _as_square(M, "M")
    try:
        eigs = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenFailureError(str(exc)) from exc
    return float(eigs.real.max())


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value of ``M``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def is_hurwitz(M: np.ndarray) -> bool:
    """True when all eigenvalues of ``M`` lie strictly in the left half plane."""
    return spectral_abscissa(M) < 0.0


def _balance_scale(A: np.ndarray) -> np.ndarray:
    # Radix-2 diagonal similarity scaling: exact in floating point, undoes
    # badly scaled coordinates before factorization.
    _, D = la.matrix_balance(A, permute=False)
    return np.diag(D).copy()


def _lyap_kron(A: np.ndarray, Q: np.ndarray, tol: float) -> np.ndarray:
    # Row-major vectorization of A P + P A^T = -Q on the balanced matrix,
    # with refinement in original coordinates so the residual contract
    # survives ill-conditioned coefficients.
    k = A.shape[0]
    scale = _balance_scale(A)
    inv_outer = np.outer(1.0 / scale, 1.0 / scale)
    outer = np.outer(scale, scale)
    Ab = (A / scale[:, None]) * scale[None, :]  # D^-1 A D
    eye = np.eye(k)
    lu = la.lu_factor(np.kron(Ab, eye) + np.kron(eye, Ab), check_finite=False)
    P = np.zeros_like(Q)
    rhs = Q
    for _ in range(4):
        delta_b = la.lu_solve(lu, -(rhs * inv_outer).reshape(-1), check_finite=False).reshape(k, k)
        delta = delta_b * outer
        P = P + 0.5 * (delta + delta.T)
        rhs = A @ P + P @ A.T + Q
        if np.linalg.norm(rhs) <= tol:
            break
    return P


def solve_lyapunov(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve ``A P + P A^T = -Q`` for Hurwitz ``A`` and symmetric ``Q``.

    Parameters
    ----------
    A : (k, k) array
        Hurwitz stable coefficient matrix.
    Q : (k, k) array
        Symmetric forcing term.

    Returns
    -------
    (k, k) array
        Symmetric solution ``P`` with Frobenius residual at most
        ``RESIDUAL_TOL * max(1, ||Q||_F)``.  ``P`` is positive semidefinite
        whenever ``Q`` is.

    Raises
    ------
    NotHurwitzError
        If the spectral abscissa of ``A`` is nonnegative.
    NumericalFailureError
        If the residual contract cannot be met.
    """
    A = _as_square(A, "A")
    Q = symmetrize(Q, "Q")
    if A.shape != Q.shape:
        raise DimensionMismatchError(f"A is {A.shape}, Q is {Q.shape}")
    if spectral_abscissa(A) >= 0.0:
        raise NotHurwitzError(f"spectral abscissa {spectral_abscissa(A):.3e} >= 0")
    k = A.shape[0]
    tol = RESIDUAL_TOL * max(1.0, np.linalg.norm(Q))
    if k <= KRON_MAX_DIM:
        P = _lyap_kron(A, Q, tol)
    else:
        # scipy's Bartels-Stewart solves A X + X A^H = Q, hence the sign flip.
        P = la.solve_continuous_lyapunov(A, -Q)
        resid = A @ P + P @ A.T + Q
        if np.all(np.isfinite(resid)) and np.linalg.norm(resid) > tol:
            P = P - la.solve_continuous_lyapunov(A, -resid)
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(A @ P + P @ A.T + Q)
    if not np.isfinite(residual) or residual > tol:
        raise NumericalFailureError(
            f"Lyapunov residual {residual:.3e} exceeds tolerance at dimension {k}"
        )
    return P


def lyapunov_differential(
    A: np.ndarray, Q: np.ndarray, V: np.ndarray, W: np.ndarray
) -> np.ndarray:
    """Differential of the Lyapunov solution map at ``(A, Q)`` along ``(V, W)``.

    Evaluates ``L(A, V P + P V^T + W)`` with ``P = L(A, Q)``, i.e. two nested
    Lyapunov solves.
    """
    P = solve_lyapunov(A, Q)
    V = _as_square(V, "V")
    W = symmetrize(W, "W")
    forcing = V @ P + P @ V.T + W
    return solve_lyapunov(A, 0.5 * (forcing + forcing.T))


class SchurLyapunovSolver:
    """One real Schur factorization of ``A`` shared by spectral-abscissa
    queries and any number of Lyapunov solves with ``A`` or ``A^T``.

    This is the Bartels-Stewart route used on hot paths where several
    equations share a coefficient matrix; it honors the same residual
    contract as :func:`solve_lyapunov`.
    """

    def __init__(self, A: np.ndarray):
        A = _as_square(A, "A")
        self.A = A
        scale = _balance_scale(A)
        self._inv_outer = np.outer(1.0 / scale, 1.0 / scale)
        self._outer = np.outer(scale, scale)
        Ab = (A / scale[:, None]) * scale[None, :]
        self._T, self._U = la.schur(Ab, output="real")
        (self._trsyl,) = la.get_lapack_funcs(("trsyl",), (self._T,))

    @property
    def abscissa(self) -> float:
        """Largest real part over the spectrum, read off the Schur blocks."""
        T = self._T
        k = T.shape[0]
        worst = -np.inf
        i = 0
        while i < k:
            if i + 1 < k and T[i + 1, i] != 0.0:
                worst = max(worst, 0.5 * (T[i, i] + T[i + 1, i + 1]))
                i += 2
            else:
                worst = max(worst, T[i, i])
                i += 1
        return float(worst)

    def _solve(self, Q: np.ndarray, adjoint: bool) -> np.ndarray:
        T, U = self._T, self._U
        trana, tranb = ("T", "N") if adjoint else ("N", "T")
        coeff = self.A.T if adjoint else self.A
        # for the adjoint equation the balancing scale enters inverted
        rhs_scale = self._outer if adjoint else self._inv_outer
        sol_scale = self._inv_outer if adjoint else self._outer
        tol = RESIDUAL_TOL * max(1.0, np.linalg.norm(Q))
        P = np.zeros_like(Q)
        rhs = Q
        # residual-driven refinement: each pass solves for the correction
        for _ in range(4):
            F = U.T @ (rhs * rhs_scale) @ U
            X, scale, info = self._trsyl(T, T, -F, isgn=1, trana=trana, tranb=tranb)
            if info < 0 or scale == 0.0 or not np.all(np.isfinite(X)):
                break
            delta = (U @ (X / scale) @ U.T) * sol_scale
            P = P + 0.5 * (delta + delta.T)
            rhs = coeff @ P + P @ coeff.T + Q
            if np.linalg.norm(rhs) <= tol:
                return P
        residual = np.linalg.norm(coeff @ P + P @ coeff.T + Q)
        if not np.isfinite(residual) or residual > tol:
            raise NumericalFailureError(
                f"Lyapunov residual {residual:.3e} exceeds tolerance (Schur path)"
            )
        return P

    def solve(self, Q: np.ndarray) -> np.ndarray:
        """Solution of ``A P + P A^T = -Q`` for symmetric ``Q``."""
        return self._solve(0.5 * (Q + Q.T), adjoint=False)

    def solve_adjoint(self, Q: np.ndarray) -> np.ndarray:
        """Solution of ``A^T P + P A = -Q`` for symmetric ``Q``."""
        return self._solve(0.5 * (Q + Q.T), adjoint=True)


def controllability_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kalman controllability matrix ``[B, AB, ..., A^(n-1) B]``."""
    A = _as_square(A, "A")
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionMismatchError(f"A is {A.shape}, B is {B.shape}")
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def observability_matrix(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Kalman observability matrix ``[C; CA; ...; C A^(n-1)]``."""
    A = _as_square(A, "A")
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(1, -1)
    if C.shape[1] != A.shape[0]:
        raise DimensionMismatchError(f"A is {A.shape}, C is {C.shape}")
    return controllability_matrix(A.T, C.T).T


def rank_margin(M: np.ndarray) -> tuple[float, float]:
    """Smallest and largest singular values of ``M`` (full-row-rank margin)."""
    svals = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    return float(svals.min()), float(svals.max())


def is_controllable(A: np.ndarray, B: np.ndarray, tol: float = RANK_TOL) -> bool:
    """Kalman rank test: smallest singular value of the controllability
    matrix must exceed ``tol * max(1, largest singular value)``."""
    smin, smax = rank_margin(controllability_matrix(A, B))
    return smin > tol * max(1.0, smax)


def is_observable(A: np.ndarray, C: np.ndarray, tol: float = RANK_TOL) -> bool:
    """Kalman rank test on the observability matrix, dual to is_controllable."""
    smin, smax = rank_margin(observability_matrix(A, C))
    return smin > tol * max(1.0, smax)


def spd_solve(G: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Solve ``G x = d`` for symmetric positive definite ``G`` by Cholesky.

    One step of iterative refinement keeps the residual within
    ``RESIDUAL_TOL * ||d||`` on moderately conditioned systems.
    """
    G = symmetrize(G, "G")
    d = np.asarray(d, dtype=float)
    try:
        factor = la.cho_factor(G, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    x = la.cho_solve(factor, d, check_finite=False)
    x = x + la.cho_solve(factor, d - G @ x, check_finite=False)
    return x


def _real_block_diagonal(poles: np.ndarray) -> np.ndarray:
    """Real block-diagonal matrix with the given self-conjugate spectrum.

    Real poles become 1x1 blocks; complex-conjugate pairs become the 2x2
    rotation-scaling block ``[[re, im], [-im, re]]``.
    """
    poles = np.asarray(poles, dtype=complex).ravel()
    remaining = list(poles)
    blocks: list[np.ndarray] = []
    tol = 1e-9 * max(1.0, np.abs(poles).max(initial=0.0))
    while remaining:
        lam = remaining.pop(0)
        if abs(lam.imag) <= tol:
            blocks.append(np.array([[lam.real]]))
            continue
        conj_idx = None
        for i, mu in enumerate(remaining):
            if abs(mu - lam.conjugate()) <= tol:
                conj_idx = i
                break
        if conj_idx is None:
            raise ValueError("requested poles are not closed under conjugation")
        remaining.pop(conj_idx)
        a, b = lam.real, abs(lam.imag)
        blocks.append(np.array([[a, b], [-b, a]]))
    return la.block_diag(*blocks) if blocks else np.zeros((0, 0))


def place_poles(
    A: np.ndarray,
    B: np.ndarray,
    poles,
    rng: np.random.Generator,
    max_tries: int = 10,
    cond_limit: float = 1e8,
    spectrum_tol: float = 1e-6,
) -> np.ndarray:
    """State-feedback gain ``F`` such that ``A - B F`` has the given spectrum.

    Uses the Sylvester method: sample a Gaussian ``G``, solve
    ``A X - X Lambda = B G`` and return ``F = G X^{-1}``.  ``G`` is resampled
    when ``X`` is ill-conditioned or the realized spectrum misses the target.

    Parameters
    ----------
    A, B : arrays
        Controllable pair, ``A`` of shape (n, n) and ``B`` of shape (n, m).
    poles : sequence of n complex values
        Requested closed-loop spectrum; must be closed under conjugation and
        disjoint from the spectrum of ``A``.
    rng : numpy Generator
        Source of the random right-hand factors.

    Raises
    ------
    PlacementFailureError
        After ``max_tries`` resamples without a verified placement.
    """
    A = _as_square(A, "A")
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    n, m = B.shape
    poles = np.asarray(poles, dtype=complex).ravel()
    if poles.size != n:
        raise DimensionMismatchError(f"need {n} poles, got {poles.size}")
    lam = _real_block_diagonal(poles)
    target = _sorted_spectrum(poles)
    for _ in range(max_tries):
        G = rng.standard_normal((m, n))
        try:
            X = la.solve_sylvester(A, -lam, B @ G)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(X)) or np.linalg.cond(X) > cond_limit:
            continue
        F = np.linalg.solve(X.T, G.T).T
        achieved = _sorted_spectrum(np.linalg.eigvals(A - B @ F))
        if np.all(np.abs(achieved - target) <= spectrum_tol):
            return F
    raise PlacementFailureError(
        f"no placement within {max_tries} tries for spectrum {np.sort_complex(poles)}"
    )


def _sorted_spectrum(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex).ravel()
    order = np.lexsort((values.imag, values.real))
    return values[order]


def solve_care(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    max_iters: int = 100,
) -> np.ndarray:
    """Stabilizing solution of ``A^T P + P A - P B R^{-1} B^T P + Q = 0``.

    Newton-Kleinman iteration: each step is one Lyapunov solve, started from
    a stabilizing gain obtained by placing poles at ``-1 - i/n``.  Iterates
    until the Riccati residual drops below ``RESIDUAL_TOL * max(1, ||Q||_F)``.

    Raises
    ------
    NoStabilizingSolutionError
        If the converged closed loop is not Hurwitz.
    NumericalFailureError
        If the residual tolerance is not reached within ``max_iters`` steps.
    """
    A = _as_square(A, "A")
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    Q = symmetrize(Q, "Q")
    R = symmetrize(R, "R")
    n = A.shape[0]
    try:
        r_factor = la.cho_factor(R, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"R is not positive definite: {exc}") from exc

    # Fixed-seed generator keeps the CARE solve fully deterministic.
    init_poles = np.array([-1.0 - (i + 1) / n for i in range(n)])
    F = place_poles(A, B, init_poles, np.random.default_rng(0))

    tol = RESIDUAL_TOL * max(1.0, np.linalg.norm(Q))
    best: np.ndarray | None = None
    best_residual = np.inf
    for _ in range(max_iters):
        P = solve_lyapunov((A - B @ F).T, Q + F.T @ R @ F)
        F = la.cho_solve(r_factor, B.T @ P, check_finite=False)
        residual = np.linalg.norm(A.T @ P + P @ A - P @ B @ F + Q)
        if residual < best_residual:
            best, best_residual = P, residual
        elif best_residual <= tol:
            # quadratic convergence has stalled at the float floor: polish done
            break
    if best is None or best_residual > tol:
        raise NumericalFailureError(
            f"CARE residual {best_residual:.3e} above tolerance {tol:.3e} "
            f"after {max_iters} iterations"
        )
    P = 0.5 * (best + best.T)
    F = la.cho_solve(r_factor, B.T @ P, check_finite=False)
    if spectral_abscissa(A - B @ F) >= 0.0:
        raise NoStabilizingSolutionError("converged CARE solution is not stabilizing")
    return P
