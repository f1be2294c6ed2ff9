"""Jacobi-preconditioned conjugate gradients for the SPD systems of the pipeline.

One solver backs the state, adjoint, and filter equations.  Warm starting from
the previous optimization iterate's solution is supported and on by default in
the callers; correctness never depends on it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = ["SolveReport", "LinearSolveError", "cg_solve"]

STATE_TOL = 1e-8
FILTER_TOL = 1e-10


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    residual_history: list = field(default_factory=list)


class LinearSolveError(RuntimeError):
    """CG failed to converge; usually a singular or indefinite system
    (e.g. missing boundary conditions)."""

    def __init__(self, message: str, report: SolveReport):
        super().__init__(message)
        self.report = report


def _check_symmetry(a: sp.spmatrix, rng_seed: int = 0) -> None:
    rng = np.random.default_rng(rng_seed)
    x = rng.standard_normal(a.shape[0])
    y = rng.standard_normal(a.shape[0])
    lhs = x @ (a @ y)
    rhs = y @ (a @ x)
    scale = max(abs(lhs), abs(rhs), 1.0)
    if abs(lhs - rhs) > 1e-10 * scale:
        raise ValueError("cg_solve: matrix fails the random symmetry probe")


def cg_solve(
    asp: sp.spmatrix,
    b: np.ndarray,
    tol: float = STATE_TOL,
    max_it: int | None = None,
    x0: np.ndarray | None = None,
    debug: bool = False,
    record_history: bool = False,
) -> tuple[np.ndarray, SolveReport]:
    """Solve asp @ x = b to ||b - asp x||_2 <= tol * ||b||_2.

    Jacobi (diagonal) preconditioning.  ``x0`` warm-starts the iteration.
    ``debug`` enables a random-probe symmetry check; ``record_history`` logs
    the preconditioned residual norm sqrt(r' D^-1 r) per iteration.

    Raises LinearSolveError when max_it iterations do not reach the tolerance.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    n = b.size
    if max_it is None:
        max_it = max(1000, 10 * n)
    if debug:
        _check_symmetry(asp)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, True)

    diag = asp.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("cg_solve: nonpositive diagonal entry, matrix not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float, copy=True)
    r = b - asp @ x if x0 is not None else b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    history = [np.sqrt(max(rz, 0.0))] if record_history else []

    it = 0
    rnorm = float(np.linalg.norm(r))
    while rnorm > tol * bnorm:
        if it >= max_it:
            report = SolveReport(it, rnorm / bnorm, False, history)
            raise LinearSolveError(
                f"CG did not converge in {max_it} iterations "
                f"(relative residual {rnorm / bnorm:.3e})",
                report,
            )
        ap = asp @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            report = SolveReport(it, rnorm / bnorm, False, history)
            raise LinearSolveError(
                "CG breakdown: matrix is not positive definite on the free DOFs",
                report,
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        if record_history:
            history.append(np.sqrt(max(rz, 0.0)))
        rnorm = float(np.linalg.norm(r))
        it += 1
    return x, SolveReport(it, rnorm / bnorm, True, history)
