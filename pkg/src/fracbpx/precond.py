"""Matrix-free SPD preconditioners for the fractional stiffness matrix.

Three kinds:

* :func:`bpx_uniform` — additive multilevel operator on a uniformly
  refined hierarchy, with per-level weights ``h_k^(2s-2)`` and a
  correction factor ``1 - gamma_tilde^s`` on the coarse-level sum;
* :func:`bpx_graded` — the bisection-grid analog built from local
  triplet columns with per-column local scalings;
* :func:`diag_scaling` — Jacobi scaling by the matrix diagonal.

Every preconditioner is exposed as a :class:`Preconditioner` record with
a pure ``apply`` closure; the operators are symmetric positive definite
by construction (sums of scaled symmetric rank-1/identity terms).
"""

import math
from dataclasses import dataclass

import numpy as np

from .assembly import DenseSymMatrix

__all__ = [
    "Preconditioner",
    "bpx_uniform",
    "bpx_graded",
    "diag_scaling",
]

#: default correction factors per hierarchy family
DEFAULT_GAMMA_TILDE_UNIFORM = 0.5
DEFAULT_GAMMA_TILDE_GRADED = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class Preconditioner:
    """Applicable SPD operator.

    Attributes
    ----------
    n : int
        DOF dimension.
    apply : callable
        Linear, symmetric, positive definite map vector -> vector.
    descriptor : dict
        Human-readable parameter record (kind, s, gamma_tilde, ...).
    """

    n: int
    apply: object
    descriptor: dict

    def __call__(self, x):
        return self.apply(x)


def _check_params(s, gamma_tilde):
    s = float(s)
    if not (0.0 < s < 1.0):
        raise ValueError(f"fractional order s must lie in (0, 1), got {s!r}")
    g = float(gamma_tilde)
    if not (0.0 <= g < 1.0):
        raise ValueError(f"gamma_tilde must lie in [0, 1), got {gamma_tilde!r}")
    return s, g


def bpx_uniform(hier, s, gamma_tilde=DEFAULT_GAMMA_TILDE_UNIFORM):
    """Multilevel preconditioner on a uniformly refined hierarchy.

    ``apply(x) = h_J^(2s-2) x
                 + (1 - gamma_tilde^s) * sum_k h_k^(2s-2) I_k (I_k^T x)``
    with the sum over the coarse levels ``k = 0 .. J-1``; ``I_k`` are the
    cumulative prolongations and ``h_k`` the geometric level sizes.  With
    ``gamma_tilde = 0`` the coarse sum has unit weight (the uncorrected
    standard multilevel operator).

    Parameters
    ----------
    hier : UniformHierarchy
    s : float
        Fractional order in (0, 1).
    gamma_tilde : float
        Correction factor in [0, 1); default 0.5.

    Returns
    -------
    Preconditioner
    """
    s, g = _check_params(s, gamma_tilde)
    depth = hier.depth
    n = hier.n
    weights = hier.level_sizes ** (2.0 * s - 2.0)
    corr = 1.0 - g ** s
    mats = hier.prolongations

    def apply(x):
        x = np.asarray(x, dtype=np.float64)
        out = weights[depth] * x
        if depth > 0:
            acc = np.zeros_like(x)
            for k in range(depth):
                acc += weights[k] * (mats[k] @ (mats[k].T @ x))
            out += corr * acc
        return out

    return Preconditioner(
        n=n,
        apply=apply,
        descriptor={
            "kind": "bpx-uniform",
            "s": s,
            "gamma_tilde": g,
            "levels": depth + 1,
            "n": n,
        },
    )


def bpx_graded(gh, s, gamma_tilde=DEFAULT_GAMMA_TILDE_GRADED):
    """Multilevel preconditioner on a graded bisection hierarchy.

    ``apply(x) = w_p . x + (1 - gamma_tilde^s) * C (w_jq . (C^T x))``
    where ``C`` holds the triplet columns of the bisection history.
    Each rank-1 term is an exactly normalized scaled L2-projection onto
    the span of its hat: ``w = h^(2s) / ||hat||_0^2`` with the local
    scaling ``h`` of the hat's node (``h_jq`` at creation for history
    columns, ``h_p`` on the final mesh for fine nodes).  Since
    ``||hat||_0^2 = patch_area/6 = h^2 * patch_count/6``, the weights
    equal ``(6/patch_count) * h^(2s-2)``; the exact normalization
    measurably tightens cond(P*K) versus using ``h^(2s-2)`` alone.

    Parameters
    ----------
    gh : GradedHierarchy
    s : float
        Fractional order in (0, 1).
    gamma_tilde : float
        Correction factor in [0, 1); default sqrt(2)/2.

    Returns
    -------
    Preconditioner
    """
    s, g = _check_params(s, gamma_tilde)
    n = gh.n
    expo = 2.0 * s
    fine_w = gh.fine_scalings ** expo / gh.fine_mass
    col_w = gh.col_scalings ** expo / gh.col_mass
    corr = 1.0 - g ** s
    C = gh.columns
    Ct = C.T.tocsr()

    def apply(x):
        x = np.asarray(x, dtype=np.float64)
        out = fine_w * x
        if C.shape[1]:
            out = out + corr * (C @ (col_w * (Ct @ x)))
        return out

    return Preconditioner(
        n=n,
        apply=apply,
        descriptor={
            "kind": "bpx-graded",
            "s": s,
            "gamma_tilde": g,
            "steps": len(gh.history),
            "columns": C.shape[1],
            "n": n,
        },
    )


def diag_scaling(K):
    """Jacobi preconditioner ``apply(x) = x / diag(K)``.

    Raises
    ------
    ValueError
        If any diagonal entry is not strictly positive.
    """
    if isinstance(K, DenseSymMatrix):
        d = K.diagonal()
    else:
        d = np.asarray(K).diagonal().copy()
    if d.size and not np.all(d > 0.0):
        raise ValueError("matrix has a nonpositive diagonal entry")
    inv = 1.0 / d

    def apply(x):
        return inv * np.asarray(x, dtype=np.float64)

    return Preconditioner(
        n=d.size,
        apply=apply,
        descriptor={"kind": "diag", "n": d.size},
    )
