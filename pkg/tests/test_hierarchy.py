"""Multilevel structure: prolongations, projections, triplet columns."""

import numpy as np
import pytest

from fracbpx import (
    assemble_h1_stiffness,
    assemble_mass,
    build_graded_hierarchy,
    build_uniform_hierarchy,
    graded_stage_meshes,
    init_square,
    l2_projection_chain,
    triplet_columns,
    two_level_prolongation,
    uniform_refine,
)


class TestUniformHierarchy:
    def test_shapes_and_depth(self, square_hier):
        hier = square_hier(3)
        assert hier.depth == 3
        assert len(hier.meshes) == 4
        assert len(hier.prolongations) == 4
        assert hier.n == hier.meshes[-1].num_interior
        dofs = [m.num_interior for m in hier.meshes]
        assert dofs == [1, 9, 49, 225]

    def test_level_sizes_halve(self, square_hier):
        hier = square_hier(3)
        ls = hier.level_sizes
        assert len(ls) == 4
        ratios = ls[1:] / ls[:-1]
        np.testing.assert_allclose(ratios, 0.5, rtol=1e-12)
        # h0 is the measured coarse mesh size (longest edge of T0).
        assert ls[0] == pytest.approx(float(np.max(hier.meshes[0].diameters)))

    def test_finest_prolongation_is_identity(self, square_hier):
        hier = square_hier(2)
        p = hier.prolongations[-1]
        assert p.shape == (hier.n, hier.n)
        assert np.count_nonzero(np.asarray(p.todense()) - np.eye(hier.n)) == 0

    def test_prolongation_reproduces_coarse_values(self, square_hier):
        # Each coarse interior node keeps its value on every finer level.
        hier = square_hier(3)
        rng = np.random.default_rng(0)
        for k in range(hier.depth):
            coarse, fine = hier.meshes[k], hier.meshes[-1]
            v = rng.standard_normal(coarse.num_interior)
            vf = hier.prolongations[k] @ v
            fine_dof = fine.dof_index
            for vid in coarse.interior_node_ids:
                # Vertex ids persist under refinement.
                assert vf[fine_dof[vid]] == pytest.approx(
                    v[coarse.dof_index[vid]], abs=1e-14
                )

    def test_two_level_prolongation_weights(self):
        coarse = init_square()
        fine = uniform_refine(coarse)
        p = np.asarray(two_level_prolongation(coarse, fine).todense())
        assert p.shape == (fine.num_interior, coarse.num_interior)
        # Entries are nodal values of coarse hats: only 1 or 1/2 appear.
        vals = np.unique(p[p != 0.0])
        assert set(np.round(vals, 12)) <= {0.5, 1.0}

    def test_nested_galerkin_identity_for_local_forms(self, square_hier):
        # P1 nesting makes mass and H1 Galerkin projections exact.
        hier = square_hier(3)
        m_fine = assemble_mass(hier.meshes[-1]).toarray()
        a_fine = assemble_h1_stiffness(hier.meshes[-1]).toarray()
        for k in (1, 2):
            p = np.asarray(hier.prolongations[k].todense())
            m_coarse = assemble_mass(hier.meshes[k]).toarray()
            a_coarse = assemble_h1_stiffness(hier.meshes[k]).toarray()
            err_m = np.linalg.norm(p.T @ m_fine @ p - m_coarse)
            err_a = np.linalg.norm(p.T @ a_fine @ p - a_coarse)
            assert err_m <= 1e-12 * np.linalg.norm(m_coarse)
            assert err_a <= 1e-12 * np.linalg.norm(a_coarse)

    def test_rejects_negative_depth(self):
        with pytest.raises(ValueError):
            build_uniform_hierarchy(init_square(), -1)


class TestProjectionChain:
    def test_slices_telescope_to_identity(self, square_hier):
        hier = square_hier(3)
        m_fine = assemble_mass(hier.meshes[-1])
        rng = np.random.default_rng(1)
        v = rng.standard_normal(hier.n)
        slices = l2_projection_chain(hier, m_fine, v)
        assert len(slices) == hier.depth + 1
        total = np.sum(slices, axis=0)
        assert np.linalg.norm(total - v) <= 1e-10 * np.linalg.norm(v)

    def test_coarse_functions_have_no_fine_detail(self, square_hier):
        # A function already on level k projects to itself: slices above
        # level k vanish.
        hier = square_hier(3)
        m_fine = assemble_mass(hier.meshes[-1])
        rng = np.random.default_rng(2)
        k = 1
        v = hier.prolongations[k] @ rng.standard_normal(
            hier.meshes[k].num_interior
        )
        slices = l2_projection_chain(hier, m_fine, v)
        for w in slices[k + 1 :]:
            assert np.linalg.norm(w) <= 1e-10 * np.linalg.norm(v)

    def test_slices_are_mass_orthogonal_across_levels(self, square_hier):
        hier = square_hier(2)
        m_fine = assemble_mass(hier.meshes[-1])
        rng = np.random.default_rng(3)
        v = rng.standard_normal(hier.n)
        slices = l2_projection_chain(hier, m_fine, v)
        # (Q_k - Q_{k-1})v is M-orthogonal to every coarser slice.
        for a in range(len(slices)):
            for b in range(a):
                ip = float(slices[a] @ (m_fine @ slices[b]))
                assert abs(ip) <= 1e-10 * np.linalg.norm(v) ** 2


def _ladder_prefix(max_dofs=250):
    return list(graded_stage_meshes(4.0, 2.0, max_dofs))


class TestGradedStages:
    def test_frozen_dof_ladder_prefix(self, graded_ladder):
        dofs = [mesh.num_interior for _, mesh, _ in graded_ladder]
        assert dofs[:8] == [5, 5, 21, 21, 73, 73, 221, 221]
        assert dofs == sorted(dofs)
        assert all(n <= 14000 for n in dofs)

    def test_stage_numbers_consecutive(self, graded_ladder):
        stages = [st for st, _, _ in graded_ladder]
        assert stages == list(range(1, len(stages) + 1))

    def test_max_dofs_is_respected(self):
        ladder = _ladder_prefix(max_dofs=100)
        assert all(m.num_interior <= 100 for _, m, _ in ladder)
        assert ladder[-1][1].num_interior == 73

    def test_stage_cap(self):
        ladder = list(graded_stage_meshes(4.0, 2.0, 10**6, stage_cap=3))
        assert len(ladder) == 3

    def test_deterministic(self):
        a = _ladder_prefix(150)
        b = _ladder_prefix(150)
        for (_, ma, _), (_, mb, _) in zip(a, b):
            np.testing.assert_array_equal(ma.coords, mb.coords)
            np.testing.assert_array_equal(
                ma.element_vertices, mb.element_vertices
            )

    def test_grading_concentrates_near_boundary(self):
        mesh = _ladder_prefix(250)[-1][1]
        d = mesh.diameters
        bc = mesh.barycenters
        dist = 1.0 - np.max(np.abs(bc), axis=1)  # distance to square boundary
        near = d[dist < 0.125]
        far = d[dist > 0.5]
        assert near.min() < 0.5 * far.min()

    def test_history_accounts_for_every_new_vertex(self):
        # Each recorded step inserts exactly one midpoint, so the final
        # vertex count is the initial one plus the history length, and the
        # recorded midpoint ids enumerate the new vertices in order.
        stage, mesh, history = _ladder_prefix(100)[-1]
        n0 = len(init_square().vertices)
        assert len(mesh.vertices) == n0 + len(history)
        mids = [step.midpoint for step in history]
        assert mids == list(range(n0, len(mesh.vertices)))


@pytest.fixture(scope="module")
def small():
    stage, mesh, history = _ladder_prefix(100)[-1]
    return mesh, history, build_graded_hierarchy(mesh, history)


class TestGradedHierarchy:

    def test_column_shapes_and_meta(self, small):
        mesh, history, gh = small
        n, ncols = gh.columns.shape
        assert n == mesh.num_interior
        assert ncols == len(gh.col_scalings) == len(gh.col_meta)
        assert ncols == len(gh.col_mass)
        steps = [j for j, _ in gh.col_meta]
        assert min(steps) >= 1 and max(steps) <= len(history)

    def test_columns_are_nodal_hats(self, small):
        # A column created at step j has value 1 at its own vertex if that
        # vertex still carries a fine DOF, by interpolation invariance.
        mesh, history, gh = small
        c = gh.columns.tocsc()
        dof = mesh.dof_index
        for col, (j, q) in enumerate(gh.col_meta):
            v = c[:, col].toarray().ravel()
            assert v[dof[q]] == pytest.approx(1.0, abs=1e-14)
            assert v.min() >= -1e-14 and v.max() <= 1.0 + 1e-14

    def test_col_mass_is_exact_hat_mass_at_creation(self, small):
        # Frozen contract: the squared L2 norm of the hat at creation time
        # equals patch_area / 6, which the hierarchy stores per column.
        mesh, history, gh = small
        for col, (j, q) in enumerate(gh.col_meta):
            step = history[j - 1]
            area = step.local_scalings[q] ** 2 * step.patch_counts[q]
            assert gh.col_mass[col] == pytest.approx(area / 6.0, rel=1e-12)

    def test_fine_mass_matches_mass_diagonal(self, small):
        mesh, _, gh = small
        m = assemble_mass(mesh)
        np.testing.assert_allclose(gh.fine_mass, m.diagonal(), rtol=1e-12)

    def test_triplet_columns_match_collected_matrix(self, small):
        mesh, history, gh = small
        dense = gh.columns.toarray()
        j = max(j for j, _ in gh.col_meta) // 2
        pairs = triplet_columns(history, j, mesh)
        cols = [i for i, (jj, _) in enumerate(gh.col_meta) if jj == j]
        assert [q for q, _ in pairs] == [gh.col_meta[i][1] for i in cols]
        for (_, col), i in zip(pairs, cols):
            np.testing.assert_allclose(col, dense[:, i], atol=1e-14)

    def test_triplet_columns_rejects_bad_step(self, small):
        mesh, history, _ = small
        with pytest.raises(ValueError):
            triplet_columns(history, 0, mesh)
        with pytest.raises(ValueError):
            triplet_columns(history, len(history) + 1, mesh)

    def test_uniform_refinement_scalings_lattice_value(self):
        # All triangles of the refined lattice are congruent with area
        # h^2/2, so sqrt(patch_area / patch_count) = h/sqrt(2) at every
        # interior node regardless of its ring size.
        from fracbpx import fine_node_scalings

        mesh1 = uniform_refine(init_square())
        h = 0.5  # lattice spacing after one refinement of the 3x3 grid
        sc = fine_node_scalings(mesh1)
        assert sorted(sc) == sorted(int(v) for v in mesh1.interior_node_ids)
        np.testing.assert_allclose(
            sorted(sc.values()), h / np.sqrt(2.0), rtol=1e-12
        )
