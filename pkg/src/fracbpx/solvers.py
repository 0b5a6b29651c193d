"""Iterative solvers and a Lanczos condition-number estimator.

Gauss-Seidel, conjugate gradients, and preconditioned conjugate
gradients, all starting from the zero vector and stopping on the
Euclidean relative residual ``||b - K x|| / ||b|| <= tol``; plus a
Lanczos estimator for the extreme eigenvalues of ``K`` or of a
preconditioned operator ``P K`` (run in the stiffness inner product, in
which ``P K`` is self-adjoint, so only applications of ``K`` and ``P``
are needed).
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numba import njit

__all__ = [
    "SolveReport",
    "CondEstimate",
    "gauss_seidel",
    "cg",
    "pcg",
    "lanczos_cond",
]


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one iterative solve."""

    iterations: int
    final_relative_residual: float
    converged: bool
    wall_time: float


@dataclass(frozen=True)
class CondEstimate:
    """Extreme Ritz values and their ratio."""

    lambda_min: float
    lambda_max: float
    cond: float
    lanczos_steps: int


def _as_matrix(K):
    a = np.asarray(K, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    return a


def _as_apply(P):
    if P is None:
        return None
    apply = getattr(P, "apply", None)
    return apply if apply is not None else P


@njit(cache=True)
def _gs_run(A, b, x, tol, max_iter, bnorm):
    """Forward Gauss-Seidel sweeps; returns (iterations, rel_residual)."""
    n = A.shape[0]
    it = 0
    rel = 1.0
    while it < max_iter:
        for i in range(n):
            acc = b[i]
            for j in range(n):
                acc -= A[i, j] * x[j]
            acc += A[i, i] * x[i]
            x[i] = acc / A[i, i]
        it += 1
        rr = 0.0
        for i in range(n):
            acc = b[i]
            for j in range(n):
                acc -= A[i, j] * x[j]
            rr += acc * acc
        rel = np.sqrt(rr) / bnorm
        if rel <= tol:
            break
    return it, rel


def gauss_seidel(K, b, tol=1e-6, max_iter=None):
    """Forward Gauss-Seidel from the zero vector.

    Returns
    -------
    (numpy.ndarray, SolveReport)
    """
    A = _as_matrix(K)
    b = np.asarray(b, dtype=np.float64)
    n = A.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    t0 = time.perf_counter()
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n)
    if bnorm == 0.0:
        return x, SolveReport(0, 0.0, True, time.perf_counter() - t0)
    it, rel = _gs_run(A, b, x, float(tol), int(max_iter), bnorm)
    return x, SolveReport(
        iterations=int(it),
        final_relative_residual=float(rel),
        converged=bool(rel <= tol),
        wall_time=time.perf_counter() - t0,
    )


def _cg_core(A, b, tol, max_iter, papply):
    n = A.shape[0]
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n)
    if bnorm == 0.0:
        return x, 0, 0.0
    r = b.copy()
    z = papply(r) if papply is not None else r
    if papply is not None:
        rz = float(r @ z)
        if rz <= 0.0:
            raise RuntimeError(
                "preconditioner produced a nonpositive inner product "
                f"(r'z = {rz:.3e}); it is not positive definite"
            )
    else:
        rz = float(r @ r)
    p = z.copy()
    it = 0
    while it < max_iter:
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        it += 1
        if float(np.linalg.norm(r)) / bnorm <= tol:
            break
        if papply is not None:
            z = papply(r)
            rz_new = float(r @ z)
            if rz_new <= 0.0:
                raise RuntimeError(
                    "preconditioner produced a nonpositive inner product "
                    f"(r'z = {rz_new:.3e}); it is not positive definite"
                )
        else:
            z = r
            rz_new = float(r @ r)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
    true_rel = float(np.linalg.norm(b - A @ x)) / bnorm
    return x, it, true_rel


def cg(K, b, tol=1e-6, max_iter=None):
    """Conjugate gradients from the zero vector.

    The recursive residual drives the stopping test; the reported final
    residual is recomputed from scratch.
    """
    A = _as_matrix(K)
    b = np.asarray(b, dtype=np.float64)
    if max_iter is None:
        max_iter = A.shape[0]
    t0 = time.perf_counter()
    x, it, rel = _cg_core(A, b, float(tol), int(max_iter), None)
    return x, SolveReport(
        iterations=int(it),
        final_relative_residual=rel,
        converged=bool(rel <= tol),
        wall_time=time.perf_counter() - t0,
    )


def pcg(K, P, b, tol=1e-6, max_iter=None):
    """Preconditioned conjugate gradients from the zero vector.

    Parameters
    ----------
    K : DenseSymMatrix or ndarray
    P : Preconditioner or callable
        SPD operator; a nonpositive preconditioned inner product aborts
        with a diagnostic error.
    """
    A = _as_matrix(K)
    b = np.asarray(b, dtype=np.float64)
    if max_iter is None:
        max_iter = A.shape[0]
    t0 = time.perf_counter()
    x, it, rel = _cg_core(A, b, float(tol), int(max_iter), _as_apply(P))
    return x, SolveReport(
        iterations=int(it),
        final_relative_residual=rel,
        converged=bool(rel <= tol),
        wall_time=time.perf_counter() - t0,
    )


def _lanczos_once(A, papply, steps, rng):
    """One Lanczos run; returns (alphas, betas, steps_done).

    Euclidean inner product for plain ``A``; stiffness inner product
    ``<u, v> = u' A v`` for the preconditioned operator ``P A`` (which is
    self-adjoint in it).  Full two-pass Gram-Schmidt reorthogonalization.
    """
    n = A.shape[0]
    steps = min(steps, n)
    q = rng.standard_normal(n)
    V = np.empty((steps, n))
    # W[k] holds the inner-product image of V[k]: A @ V[k] when
    # preconditioned (stiffness inner product), else V[k] itself.
    W = np.empty((steps, n))
    alphas = []
    betas = []

    def image(v):
        return A @ v if papply is not None else v

    wq = image(q)
    nrm = np.sqrt(float(q @ wq))
    if nrm <= 0.0:
        return np.array([]), np.array([]), 0
    v = q / nrm
    V[0] = v
    W[0] = image(v)
    beta = 0.0
    k = 0
    while k < steps:
        if papply is not None:
            u = papply(A @ V[k])
        else:
            u = A @ V[k]
        alpha = float(W[k] @ u)
        alphas.append(alpha)
        u = u - alpha * V[k]
        if k > 0:
            u = u - beta * V[k - 1]
        # full reorthogonalization, two passes
        for _ in range(2):
            coef = W[: k + 1] @ u
            u = u - coef.T @ V[: k + 1]
        wu = image(u)
        beta = np.sqrt(max(float(u @ wu), 0.0))
        k += 1
        if k == steps:
            break
        if beta <= 1e-13 * max(1.0, abs(alpha)):
            break  # invariant subspace found
        betas.append(beta)
        V[k] = u / beta
        W[k] = wu / beta
    return np.array(alphas), np.array(betas), k


def lanczos_cond(K, precond=None, steps=None, seed=0):
    """Extreme-eigenvalue estimate of ``K`` or of ``P K``.

    Parameters
    ----------
    K : DenseSymMatrix or ndarray
        SPD matrix.
    precond : Preconditioner or callable, optional
        When given, estimates the spectrum of the preconditioned
        operator via Lanczos in the stiffness inner product.
    steps : int, optional
        Krylov dimension; default ``min(n, 400)``.
    seed : int
        Seed for the start vector (deterministic results).

    Returns
    -------
    CondEstimate
    """
    A = _as_matrix(K)
    papply = _as_apply(precond)
    n = A.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if steps is None:
        steps = min(n, 400)
    steps = int(min(steps, n))
    rng = np.random.default_rng(seed)
    lo = np.inf
    hi = -np.inf
    done = 0
    for attempt in range(4):  # initial run plus up to 3 restarts
        alphas, betas, k = _lanczos_once(A, papply, steps, rng)
        if k > 0:
            if k == 1:
                ev = alphas[:1]
            else:
                ev = scipy.linalg.eigh_tridiagonal(
                    alphas, betas[: k - 1], eigvals_only=True
                )
            lo = min(lo, float(ev[0]))
            hi = max(hi, float(ev[-1]))
            done = max(done, k)
        if done >= steps:
            break
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise RuntimeError("Lanczos failed to produce Ritz values")
    return CondEstimate(
        lambda_min=lo, lambda_max=hi, cond=hi / lo, lanczos_steps=done
    )
