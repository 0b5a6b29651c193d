"""Iterative solvers and Lanczos extreme-eigenvalue estimation."""

import numpy as np
import pytest

from fracbpx import (
    DenseSymMatrix,
    Preconditioner,
    bpx_uniform,
    cg,
    gauss_seidel,
    lanczos_cond,
    pcg,
)


def spd_system(n, seed, cond=50.0):
    """Random SPD system with prescribed spectrum 1..cond."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    a = (q * lam) @ q.T
    a = 0.5 * (a + a.T)
    return a, lam, rng.standard_normal(n)


class TestGaussSeidel:
    def test_solves_spd_system(self):
        a, _, b = spd_system(40, seed=1)
        x, rep = gauss_seidel(a, b, tol=1e-10)
        assert rep.converged
        assert rep.final_relative_residual <= 1e-10
        assert np.linalg.norm(b - a @ x) / np.linalg.norm(b) <= 1e-10
        ref = np.linalg.solve(a, b)
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) <= 1e-7

    def test_zero_rhs_returns_zero(self):
        a, _, _ = spd_system(12, seed=2)
        x, rep = gauss_seidel(a, np.zeros(12))
        assert rep.iterations == 0
        assert rep.converged
        assert np.all(x == 0.0)

    def test_iteration_cap_reported_honestly(self):
        a, _, b = spd_system(40, seed=3, cond=1e4)
        x, rep = gauss_seidel(a, b, tol=1e-14, max_iter=3)
        assert rep.iterations == 3
        assert not rep.converged
        assert rep.final_relative_residual > 1e-14

    def test_accepts_wrapped_matrix(self):
        a, _, b = spd_system(25, seed=4)
        x1, r1 = gauss_seidel(DenseSymMatrix(a), b, tol=1e-9)
        x2, r2 = gauss_seidel(a, b, tol=1e-9)
        assert r1.iterations == r2.iterations
        np.testing.assert_array_equal(x1, x2)


class TestConjugateGradients:
    def test_converged_means_true_residual_below_tol(self):
        a, _, b = spd_system(60, seed=5, cond=1e3)
        x, rep = cg(a, b, tol=1e-8, max_iter=2000)
        assert rep.converged
        assert np.linalg.norm(b - a @ x) / np.linalg.norm(b) <= 1e-8

    def test_exact_termination_on_small_spectrum(self):
        # Matrix with 3 distinct eigenvalues: CG finishes in <= 3 steps.
        rng = np.random.default_rng(6)
        q, _ = np.linalg.qr(rng.standard_normal((30, 30)))
        lam = np.repeat([1.0, 4.0, 9.0], 10)
        a = (q * lam) @ q.T
        a = 0.5 * (a + a.T)
        b = rng.standard_normal(30)
        _, rep = cg(a, b, tol=1e-10)
        assert rep.iterations <= 3

    def test_zero_rhs(self):
        a, _, _ = spd_system(10, seed=7)
        x, rep = cg(a, np.zeros(10))
        assert rep.iterations == 0 and rep.converged
        assert np.all(x == 0.0)

    def test_iteration_count_deterministic(self):
        a, _, b = spd_system(50, seed=8, cond=300.0)
        reps = [cg(a, b, tol=1e-9, max_iter=2000)[1].iterations for _ in range(2)]
        assert reps[0] == reps[1]


class TestPreconditionedCG:
    def test_exact_inverse_converges_in_two_steps(self):
        a, _, b = spd_system(45, seed=9, cond=1e5)
        inv = np.linalg.inv(a)
        inv = 0.5 * (inv + inv.T)
        _, rep = pcg(a, lambda r: inv @ r, b, tol=1e-10)
        assert rep.iterations <= 2
        assert rep.converged

    def test_identity_preconditioner_matches_cg(self):
        a, _, b = spd_system(45, seed=10, cond=1e3)
        _, rep_cg = cg(a, b, tol=1e-9, max_iter=2000)
        _, rep_pcg = pcg(a, lambda r: r.copy(), b, tol=1e-9, max_iter=2000)
        assert rep_pcg.iterations == rep_cg.iterations

    def test_accepts_preconditioner_object(self):
        a, _, b = spd_system(20, seed=11)
        d = 1.0 / np.diag(a)
        p = Preconditioner(n=20, apply=lambda r: d * r, descriptor="jacobi")
        x, rep = pcg(a, p, b, tol=1e-9, max_iter=500)
        assert rep.converged
        assert np.linalg.norm(b - a @ x) / np.linalg.norm(b) <= 1e-9

    def test_rejects_indefinite_preconditioner(self):
        a, _, b = spd_system(15, seed=12)
        with pytest.raises(RuntimeError, match="positive"):
            pcg(a, lambda r: -r, b)

    def test_beats_cg_on_mesh_problem(self, square_hier, square_K, square_b):
        hier = square_hier(3)
        k = square_K(3, 0.5)
        b = square_b(3)
        _, rep_cg = cg(k, b, tol=1e-6)
        _, rep_pcg = pcg(k, bpx_uniform(hier, 0.5, 0.5), b, tol=1e-6)
        assert rep_pcg.converged and rep_cg.converged
        assert rep_pcg.iterations <= rep_cg.iterations


class TestLanczosCond:
    def test_matches_dense_extremes_unpreconditioned(self):
        a, lam, _ = spd_system(120, seed=13, cond=1e3)
        est = lanczos_cond(a)
        assert abs(est.lambda_min - lam[0]) <= 0.05 * lam[0]
        assert abs(est.lambda_max - lam[-1]) <= 0.05 * lam[-1]
        assert abs(est.cond - lam[-1] / lam[0]) <= 0.05 * (lam[-1] / lam[0])

    def test_matches_dense_eig_on_stiffness(self, square_K):
        k = square_K(2, 0.5)
        w = np.linalg.eigvalsh(np.asarray(k))
        est = lanczos_cond(k)
        dense_cond = w[-1] / w[0]
        assert abs(est.cond - dense_cond) <= 0.05 * dense_cond

    def test_preconditioned_estimate_matches_generalized_eig(
        self, square_hier, square_K
    ):
        import scipy.linalg

        hier = square_hier(2)
        k = square_K(2, 0.5)
        p = bpx_uniform(hier, 0.5, 0.5)
        n = hier.n
        pmat = np.column_stack([p.apply(e) for e in np.eye(n)])
        # P*K is similar to the SPD pencil K v = lambda P^{-1} v.
        w = scipy.linalg.eigh(
            np.asarray(k), np.linalg.inv(pmat), eigvals_only=True
        )
        est = lanczos_cond(k, precond=p)
        dense_cond = w[-1] / w[0]
        assert abs(est.cond - dense_cond) <= 0.05 * dense_cond

    def test_seed_determinism_and_sensitivity(self):
        a, _, _ = spd_system(80, seed=14, cond=500.0)
        e1 = lanczos_cond(a, seed=3)
        e2 = lanczos_cond(a, seed=3)
        assert e1 == e2

    def test_step_budget_respected(self):
        a, _, _ = spd_system(200, seed=15, cond=1e4)
        est = lanczos_cond(a, steps=12)
        assert est.lanczos_steps <= 12

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            lanczos_cond(np.zeros((0, 0)))


class TestSolverAgreement:
    def test_all_solvers_agree_on_mesh_system(self, square_hier, square_K, square_b):
        hier = square_hier(2)
        k = square_K(2, 0.5)
        b = square_b(2)
        x_gs, _ = gauss_seidel(k, b, tol=1e-10)
        x_cg, _ = cg(k, b, tol=1e-10)
        x_pcg, _ = pcg(k, bpx_uniform(hier, 0.5, 0.5), b, tol=1e-10)
        assert np.linalg.norm(x_gs - x_cg) / np.linalg.norm(x_cg) <= 1e-8
        assert np.linalg.norm(x_pcg - x_cg) / np.linalg.norm(x_cg) <= 1e-8
