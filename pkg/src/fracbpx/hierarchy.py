"""Multilevel structure consumed by the BPX preconditioners.

Two hierarchy flavors:

* :class:`UniformHierarchy` — a chain of uniformly refined meshes with
  cumulative prolongation matrices (level-k DOFs to finest DOFs) and
  geometric level sizes;
* :class:`GradedHierarchy` — the by-product of a sequence of conforming
  edge bisections: for every bisection step, the hats of the step's
  vertex triplet (new midpoint and the two edge endpoints) expressed in
  the finest nodal basis, together with per-column local scalings.

Both are plain data holders; all propagation uses midpoint interpolation
(a new vertex takes the average of its parent edge endpoints), which is
exact for continuous piecewise-linear functions on nested meshes.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
from numba import njit

from .assembly import assemble_mass
from .mesh import Mesh, uniform_refine

__all__ = [
    "UniformHierarchy",
    "GradedHierarchy",
    "build_uniform_hierarchy",
    "build_graded_hierarchy",
    "two_level_prolongation",
    "triplet_columns",
    "fine_node_scalings",
    "l2_projection_chain",
]

#: refinement ratio of the uniform family
_GAMMA = 0.5

#: element budget shared with mesh construction
_MAX_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class UniformHierarchy:
    """Uniformly refined mesh family with cumulative prolongations.

    Attributes
    ----------
    meshes : list of Mesh
        ``meshes[k]`` is the level-k mesh; ``meshes[-1]`` the finest.
    prolongations : list of scipy.sparse.csr_matrix
        ``prolongations[k]`` maps level-k interior DOFs to finest
        interior DOFs; the last entry is the identity.
    level_sizes : numpy.ndarray
        ``level_sizes[k] = h0 * gamma**k`` with ``h0`` the measured
        maximal element diameter of the coarsest mesh and gamma = 1/2.
    """

    meshes: list
    prolongations: list
    level_sizes: np.ndarray

    @property
    def depth(self):
        """Number of refinement levels (finest index)."""
        return len(self.meshes) - 1

    @property
    def n(self):
        """Finest interior-DOF count."""
        return self.meshes[-1].num_interior


@dataclass(frozen=True)
class GradedHierarchy:
    """Bisection-history basis columns on the final mesh.

    Attributes
    ----------
    mesh : Mesh
        Final mesh (all steps applied).
    history : list of BisectionStep
        The ordered bisection steps, concatenated over all stages.
    columns : scipy.sparse.csr_matrix
        ``(n, ncols)``; column ``c`` is the finest-basis coefficient
        vector of the hat at vertex ``col_meta[c][1]`` on the mesh right
        after step ``col_meta[c][0]`` (1-based step numbers).
    col_scalings : numpy.ndarray
        Local scaling ``h_{j,q}`` recorded by the step for each column.
    col_meta : list of (int, int)
        ``(step number j, vertex id q)`` per column.
    fine_scalings : numpy.ndarray
        Local scaling ``h_p`` of every interior node of the final mesh,
        indexed by DOF.
    col_mass : numpy.ndarray
        Exact squared L2 norm of each column's hat function (patch area
        at creation divided by 6; refining never changes the function,
        so the creation-time value is exact on the final mesh too).
    fine_mass : numpy.ndarray
        Exact squared L2 norm of each final-mesh interior hat,
        i.e. the consistent mass-matrix diagonal, indexed by DOF.
    """

    mesh: Mesh
    history: list
    columns: scipy.sparse.csr_matrix
    col_scalings: np.ndarray
    col_meta: list
    fine_scalings: np.ndarray
    col_mass: np.ndarray
    fine_mass: np.ndarray

    @property
    def n(self):
        """Interior-DOF count of the final mesh."""
        return self.mesh.num_interior


def two_level_prolongation(coarse, fine):
    """Interior-DOF prolongation for one refinement step.

    Surviving vertices keep their nodal value; each new vertex receives
    the average of its parent edge endpoints (midpoint interpolation,
    exact for P1).  Rows at new vertices whose parent is a boundary
    vertex simply drop that half (zero boundary values).
    """
    n_coarse_verts = len(coarse.vertices)
    cdof = coarse.dof_index
    fdof = fine.dof_index
    rows, cols, vals = [], [], []
    for vid in range(len(fine.vertices)):
        r = fdof[vid]
        if r < 0:
            continue
        if vid < n_coarse_verts:
            c = cdof[vid]
            if c >= 0:
                rows.append(r)
                cols.append(c)
                vals.append(1.0)
        else:
            a, b = fine.refinement_record[vid]
            for parent in (a, b):
                c = cdof[parent]
                if c >= 0:
                    rows.append(r)
                    cols.append(c)
                    vals.append(0.5)
    return scipy.sparse.coo_matrix(
        (vals, (rows, cols)), shape=(fine.num_interior, coarse.num_interior)
    ).tocsr()


def build_uniform_hierarchy(T0, Jbar):
    """Uniformly refine ``Jbar`` times and assemble prolongation chains.

    Parameters
    ----------
    T0 : Mesh
        Coarsest mesh.
    Jbar : int
        Number of refinement levels (>= 0).

    Returns
    -------
    UniformHierarchy
    """
    Jbar = int(Jbar)
    if Jbar < 0:
        raise ValueError("Jbar must be >= 0")
    if len(T0.elements) * 4 ** Jbar > _MAX_ELEMENTS:
        raise RuntimeError(
            f"uniform hierarchy with {Jbar} levels exceeds the element budget"
        )
    meshes = [T0]
    for _ in range(Jbar):
        meshes.append(uniform_refine(meshes[-1]))
    finest = meshes[-1]
    prolongations = [None] * (Jbar + 1)
    prolongations[Jbar] = scipy.sparse.identity(
        finest.num_interior, format="csr"
    )
    for k in range(Jbar - 1, -1, -1):
        step = two_level_prolongation(meshes[k], meshes[k + 1])
        prolongations[k] = (prolongations[k + 1] @ step).tocsr()
    h0 = float(np.max(T0.diameters))
    level_sizes = h0 * _GAMMA ** np.arange(Jbar + 1)
    return UniformHierarchy(
        meshes=meshes, prolongations=prolongations, level_sizes=level_sizes
    )


@njit(cache=True)
def _propagate_one(mid, ea, eb, kstart, seed, buf, touched):
    """Push a nodal hat through bisection steps ``kstart..end``.

    ``buf`` is a zeroed vertex-length scratch; returns the number of
    touched entries (listed in ``touched``), which the caller must reset.
    """
    buf[seed] = 1.0
    touched[0] = seed
    nt = 1
    for k in range(kstart, mid.shape[0]):
        va = buf[ea[k]]
        vb = buf[eb[k]]
        if va != 0.0 or vb != 0.0:
            buf[mid[k]] = 0.5 * (va + vb)
            touched[nt] = mid[k]
            nt += 1
    return nt


def _history_arrays(history):
    mid = np.array([st.midpoint for st in history], dtype=np.int64)
    ea = np.array([st.endpoint_minus for st in history], dtype=np.int64)
    eb = np.array([st.endpoint_plus for st in history], dtype=np.int64)
    return mid, ea, eb


def triplet_columns(history, j, mesh):
    """Finest-basis coefficient vectors of the step-``j`` triplet hats.

    For each interior vertex ``q`` of the triplet (midpoint and the two
    endpoints of the edge bisected at step ``j``, 1-based), the hat of
    ``q`` on the mesh right after step ``j`` is propagated through all
    subsequent steps by midpoint interpolation.

    Returns
    -------
    list of (int, numpy.ndarray)
        ``(q, column)`` pairs; columns have interior-DOF length.
    """
    if not 1 <= j <= len(history):
        raise ValueError(f"step index {j} out of range 1..{len(history)}")
    mid, ea, eb = _history_arrays(history)
    dof = mesh.dof_index
    nverts = len(mesh.vertices)
    buf = np.zeros(nverts)
    touched = np.empty(nverts, dtype=np.int64)
    out = []
    for q in history[j - 1].triplet:
        if dof[q] < 0:
            continue
        nt = _propagate_one(mid, ea, eb, j, q, buf, touched)
        col = np.zeros(mesh.num_interior)
        for vid in touched[:nt]:
            d = dof[vid]
            if d >= 0:
                col[d] = buf[vid]
        buf[touched[:nt]] = 0.0
        out.append((q, col))
    return out


def fine_node_scalings(mesh):
    """Local scaling ``h_p = (|patch of p| / #elements in patch)^(1/2)``.

    Returns
    -------
    dict
        Maps each interior vertex id to its scaling.
    """
    nverts = len(mesh.vertices)
    areas = np.zeros(nverts)
    counts = np.zeros(nverts, dtype=np.int64)
    for t, vids in enumerate(mesh.element_vertices):
        a = mesh.areas[t]
        for v in vids:
            areas[v] += a
            counts[v] += 1
    return {
        int(vid): float(np.sqrt(areas[vid] / counts[vid]))
        for vid in mesh.interior_node_ids
    }


def build_graded_hierarchy(mesh, history):
    """Collect all triplet columns of a bisection history on its final mesh.

    Parameters
    ----------
    mesh : Mesh
        The mesh after every step in ``history`` has been applied.
    history : list of BisectionStep
        Concatenated steps of all refinement stages, in creation order.

    Returns
    -------
    GradedHierarchy
    """
    mid, ea, eb = _history_arrays(history)
    dof = mesh.dof_index
    nverts = len(mesh.vertices)
    ndof = mesh.num_interior
    buf = np.zeros(nverts)
    touched = np.empty(nverts, dtype=np.int64)
    rows, cols, vals = [], [], []
    col_scalings = []
    col_mass = []
    col_meta = []
    ncols = 0
    for k, step in enumerate(history):
        for q in step.triplet:
            if dof[q] < 0:
                continue
            nt = _propagate_one(mid, ea, eb, k + 1, q, buf, touched)
            for vid in touched[:nt]:
                d = dof[vid]
                if d >= 0:
                    rows.append(d)
                    cols.append(ncols)
                    vals.append(buf[vid])
            buf[touched[:nt]] = 0.0
            h = step.local_scalings[q]
            col_scalings.append(h)
            col_mass.append(h * h * step.patch_counts[q] / 6.0)
            col_meta.append((k + 1, int(q)))
            ncols += 1
    columns = scipy.sparse.coo_matrix(
        (vals, (rows, cols)), shape=(ndof, ncols)
    ).tocsr()
    patch_areas = np.zeros(nverts)
    for t, vids in enumerate(mesh.element_vertices):
        a = mesh.areas[t]
        for v in vids:
            patch_areas[v] += a
    scal_map = fine_node_scalings(mesh)
    fine = np.zeros(ndof)
    fine_mass = np.zeros(ndof)
    for vid, h in scal_map.items():
        d = mesh.dof_index[vid]
        fine[d] = h
        fine_mass[d] = patch_areas[vid] / 6.0
    return GradedHierarchy(
        mesh=mesh,
        history=list(history),
        columns=columns,
        col_scalings=np.array(col_scalings),
        col_meta=col_meta,
        fine_scalings=fine,
        col_mass=np.array(col_mass),
        fine_mass=fine_mass,
    )


def l2_projection_chain(hier, M_fine, v):
    """Telescoping L2-projection slices of a finest-DOF vector.

    ``w_k = (Q_k - Q_{k-1}) v`` where ``Q_k`` is the mass-orthogonal
    projection onto level k (expressed in the finest basis) and
    ``Q_{-1} = 0``; the top slice uses ``Q_depth = identity`` so the
    slices telescope exactly.  Level mass solves use dense Cholesky
    (verification-scale only).
    """
    v = np.asarray(v, dtype=np.float64)
    depth = hier.depth
    mv = M_fine @ v
    prev = np.zeros_like(v)
    out = []
    for k in range(depth):
        Ik = hier.prolongations[k]
        Mk = assemble_mass(hier.meshes[k]).toarray()
        rhs = Ik.T @ mv
        ck = scipy.linalg.cho_solve(scipy.linalg.cho_factor(Mk), rhs)
        qk = Ik @ ck
        out.append(qk - prev)
        prev = qk
    out.append(v - prev)
    return out
