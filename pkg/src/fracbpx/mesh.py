"""Conforming 2D triangulations with uniform and bisection refinement.

This module builds and refines triangle meshes of the square ``(-1, 1)^2``
and of the unit disk.  Two refinement mechanisms are provided:

* ``uniform_refine`` — red refinement: every triangle is split into four
  similar children, halving the mesh size exactly.
* ``bisect_marked`` — newest-vertex bisection with recursive completion.
  Each conforming edge split is recorded as a :class:`BisectionStep`
  (endpoints, midpoint, generation, ring, and local size scalings), which
  downstream modules use to build the multilevel decomposition of graded
  meshes.

Every element stores its three vertex ids ordered so that the refinement
edge is the edge opposite vertex 0, i.e. ``(vertex_ids[1], vertex_ids[2])``.
Meshes are immutable after construction; refinement returns new objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Vertex",
    "Element",
    "Mesh",
    "BisectionStep",
    "MeshStats",
    "init_square",
    "init_disk",
    "uniform_refine",
    "bisect_marked",
    "graded_mark",
    "compute_levels",
    "mesh_stats",
    "save_mesh",
    "load_mesh",
]


class InvalidMeshError(ValueError):
    """Raised when a mesh violates conformity or labeling invariants."""


@dataclass(frozen=True)
class Vertex:
    """A mesh vertex.

    Attributes
    ----------
    id : int
        Global vertex index; stable under refinement.
    x, y : float
        Coordinates.
    on_boundary : bool
        Whether the vertex lies on the domain boundary.
    """

    id: int
    x: float
    y: float
    on_boundary: bool


@dataclass(frozen=True)
class Element:
    """A triangle with refinement-edge bookkeeping.

    Attributes
    ----------
    id : int
        Global element index; ids are never reused across refinements.
    vertex_ids : tuple of int
        The three vertices in counterclockwise order, arranged so the
        refinement edge is ``(vertex_ids[1], vertex_ids[2])``.
    generation : int
        Number of bisections separating the element from the initial mesh
        (red refinement advances the generation by one as well).
    """

    id: int
    vertex_ids: tuple
    generation: int

    @property
    def refinement_edge(self):
        """The refinement edge as a vertex-id pair."""
        return (self.vertex_ids[1], self.vertex_ids[2])


@dataclass(frozen=True)
class BisectionStep:
    """Record of one conforming edge bisection.

    Attributes
    ----------
    index : int
        Position of the step within the list returned by one
        :func:`bisect_marked` call (0-based creation order).
    endpoint_minus, endpoint_plus : int
        Vertex ids of the bisected edge (smaller id first).
    midpoint : int
        Vertex id of the newly created edge midpoint.
    generation : int
        Generation of the child elements created by this step; all parents
        in the ring share generation ``generation - 1``.
    ring_elements : tuple of int
        Ids of the (parent) elements sharing the bisected edge.
    local_size : float
        Diameter of the patch of elements containing the midpoint,
        measured immediately after the step.
    local_scalings : dict
        Maps each of the three vertices of the triplet
        ``(midpoint, endpoint_plus, endpoint_minus)`` to
        ``(patch_area / patch_cardinality) ** 0.5`` measured immediately
        after the step.
    patch_counts : dict
        Maps the same three vertices to the number of elements in their
        patch immediately after the step, so that the exact L2 mass of
        the vertex hat at creation, ``patch_area / 6``, can be recovered
        as ``local_scalings[q]**2 * patch_counts[q] / 6``.
    """

    index: int
    endpoint_minus: int
    endpoint_plus: int
    midpoint: int
    generation: int
    ring_elements: tuple
    local_size: float
    local_scalings: dict
    patch_counts: dict

    @property
    def triplet(self):
        """The vertex triplet (midpoint, endpoint_plus, endpoint_minus)."""
        return (self.midpoint, self.endpoint_plus, self.endpoint_minus)


@dataclass(frozen=True)
class MeshStats:
    """Global mesh quality numbers.

    Attributes
    ----------
    h_min, h_max : float
        Smallest and largest element diameter.
    shape_regularity : float
        Worst diameter-to-inradius ratio over all elements.
    k_star : int
        The larger of (a) the maximal generation spread within any vertex
        ring and (b) the maximal vertex-ring cardinality; both stay bounded
        along the refinement families produced here.
    """

    h_min: float
    h_max: float
    shape_regularity: float
    k_star: int


def _edge_key(a, b):
    return (a, b) if a < b else (b, a)


class Mesh:
    """An immutable conforming triangulation.

    Parameters
    ----------
    vertices : list of Vertex
        Vertex table; ``vertices[i].id == i``.
    elements : list of Element
        Element table with counterclockwise vertex ordering.
    curved : str or None
        ``"unit-circle"`` when boundary edge midpoints must be projected
        onto the unit circle during refinement, otherwise ``None``.

    Notes
    -----
    The constructor validates positive orientation, conformity (each edge
    shared by one or two elements) and consistency of the vertex boundary
    flags with the boundary edges.
    """

    def __init__(self, vertices, elements, curved=None, _refinement_record=None):
        self.vertices = list(vertices)
        self.elements = list(elements)
        self.curved = curved
        # midpoint vertex id -> (parent vertex a, parent vertex b), for all
        # vertices created by the refinement call that produced this mesh
        self.refinement_record = dict(_refinement_record or {})

        for i, v in enumerate(self.vertices):
            if v.id != i:
                raise InvalidMeshError(f"vertex ids must be 0..n-1, got {v.id} at {i}")
            if not (math.isfinite(v.x) and math.isfinite(v.y)):
                raise InvalidMeshError(f"non-finite coordinates at vertex {v.id}")

        coords = np.array([(v.x, v.y) for v in self.vertices], dtype=float)
        self._coords = coords

        edge_table: dict = {}
        for el in self.elements:
            a, b, c = el.vertex_ids
            p0, p1, p2 = coords[a], coords[b], coords[c]
            area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (
                p2[0] - p0[0]
            )
            if area2 <= 0:
                raise InvalidMeshError(f"element {el.id} is not counterclockwise")
            for e in ((a, b), (b, c), (c, a)):
                edge_table.setdefault(_edge_key(*e), []).append(el.id)
        for e, els in edge_table.items():
            if len(els) > 2:
                raise InvalidMeshError(f"edge {e} shared by {len(els)} elements")
        self.edge_table = {e: tuple(els) for e, els in edge_table.items()}

        boundary_vids = set()
        for (a, b), els in self.edge_table.items():
            if len(els) == 1:
                boundary_vids.add(a)
                boundary_vids.add(b)
        for v in self.vertices:
            if v.on_boundary != (v.id in boundary_vids):
                raise InvalidMeshError(
                    f"vertex {v.id}: boundary flag inconsistent with edge table"
                )

        self.interior_node_ids = [
            v.id for v in self.vertices if not v.on_boundary
        ]

    # -- cached geometry ---------------------------------------------------

    @property
    def coords(self):
        """(n, 2) array of vertex coordinates."""
        return self._coords

    @cached_property
    def element_vertices(self):
        """(m, 3) array of vertex ids in element order."""
        return np.array([el.vertex_ids for el in self.elements], dtype=np.int64)

    @cached_property
    def areas(self):
        """(m,) array of element areas."""
        ev = self.element_vertices
        p0 = self._coords[ev[:, 0]]
        p1 = self._coords[ev[:, 1]]
        p2 = self._coords[ev[:, 2]]
        return 0.5 * np.abs(
            (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
            - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
        )

    @cached_property
    def diameters(self):
        """(m,) array of element diameters (longest edge length)."""
        ev = self.element_vertices
        p0 = self._coords[ev[:, 0]]
        p1 = self._coords[ev[:, 1]]
        p2 = self._coords[ev[:, 2]]
        d01 = np.linalg.norm(p1 - p0, axis=1)
        d12 = np.linalg.norm(p2 - p1, axis=1)
        d20 = np.linalg.norm(p0 - p2, axis=1)
        return np.maximum(np.maximum(d01, d12), d20)

    @cached_property
    def barycenters(self):
        """(m, 2) array of element barycenters."""
        ev = self.element_vertices
        return (
            self._coords[ev[:, 0]] + self._coords[ev[:, 1]] + self._coords[ev[:, 2]]
        ) / 3.0

    @cached_property
    def boundary_edges(self):
        """Sorted list of boundary edges as vertex-id pairs."""
        return sorted(e for e, els in self.edge_table.items() if len(els) == 1)

    @cached_property
    def dof_index(self):
        """Array mapping vertex id -> interior DOF index, or -1 on boundary."""
        idx = np.full(len(self.vertices), -1, dtype=np.int64)
        for k, vid in enumerate(self.interior_node_ids):
            idx[vid] = k
        return idx

    @property
    def num_interior(self):
        """Number of interior vertices (degrees of freedom)."""
        return len(self.interior_node_ids)

    def vertex_rings(self):
        """Map vertex id -> list of adjacent element ids."""
        rings: dict = {v.id: [] for v in self.vertices}
        for el in self.elements:
            for vid in el.vertex_ids:
                rings[vid].append(el.id)
        return rings


# ---------------------------------------------------------------------------
# initial meshes
# ---------------------------------------------------------------------------

def init_square():
    """Initial 8-triangle mesh of the square ``(-1, 1)^2``.

    The 3x3 vertex lattice is triangulated with all cell diagonals running
    southwest to northeast, and every triangle is labeled with its
    hypotenuse (the cell diagonal) as refinement edge.  With this labeling
    any number of uniform bisection or red refinement passes stays
    conforming.

    Returns
    -------
    Mesh
        Mesh with 9 vertices, 8 elements, 1 interior node, generation 0.
    """
    grid = {}
    vertices = []
    for j, y in enumerate((-1.0, 0.0, 1.0)):
        for i, x in enumerate((-1.0, 0.0, 1.0)):
            vid = len(vertices)
            grid[(i, j)] = vid
            on_bd = i in (0, 2) or j in (0, 2)
            vertices.append(Vertex(vid, x, y, on_bd))

    elements = []
    for cj in range(2):
        for ci in range(2):
            sw = grid[(ci, cj)]
            se = grid[(ci + 1, cj)]
            ne = grid[(ci + 1, cj + 1)]
            nw = grid[(ci, cj + 1)]
            # both triangles use the SW-NE diagonal as refinement edge
            elements.append(Element(len(elements), (se, ne, sw), 0))
            elements.append(Element(len(elements), (nw, sw, ne), 0))
    return Mesh(vertices, elements)


def _disk_base():
    """Initial disk mesh: the square mesh mapped radially onto the disk."""
    sq = init_square()
    verts = []
    for v in sq.vertices:
        r_inf = max(abs(v.x), abs(v.y))
        r_two = math.hypot(v.x, v.y)
        if r_two == 0.0:
            x, y = 0.0, 0.0
        else:
            x, y = v.x * r_inf / r_two, v.y * r_inf / r_two
        verts.append(Vertex(v.id, x, y, v.on_boundary))
    return Mesh(verts, sq.elements, curved="unit-circle")


def init_disk(target_h):
    """Quasi-uniform mesh of the unit disk with ``h_max <= target_h``.

    The square lattice mesh is mapped radially onto the disk (preserving
    the mesh topology, hence the refinement-edge labeling) and refined
    uniformly, projecting boundary midpoints onto the unit circle, until
    the target mesh size is reached.

    Parameters
    ----------
    target_h : float
        Upper bound for the largest element diameter.

    Returns
    -------
    Mesh

    Raises
    ------
    ValueError
        If ``target_h <= 0``.
    RuntimeError
        If reaching ``target_h`` would exceed the element budget.
    """
    if not target_h > 0:
        raise ValueError("target_h must be positive")
    mesh = _disk_base()
    while float(np.max(mesh.diameters)) > target_h:
        if len(mesh.elements) * 4 > 4_000_000:
            raise RuntimeError(
                "target_h too small: refinement would exceed the element budget"
            )
        mesh = uniform_refine(mesh)
    return mesh


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def _midpoint_vertex(mesh, new_id, a, b, is_boundary):
    pa, pb = mesh.coords[a], mesh.coords[b]
    x, y = 0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])
    if is_boundary and mesh.curved == "unit-circle":
        r = math.hypot(x, y)
        x, y = x / r, y / r
    return Vertex(new_id, x, y, is_boundary)


def uniform_refine(mesh):
    """Red refinement: split every triangle into four similar children.

    Each parent ``(v0, v1, v2)`` with edge midpoints ``m01, m02, m12``
    produces children ``(v0, m01, m02)``, ``(m01, v1, m12)``,
    ``(m02, m12, v2)`` and ``(m12, m02, m01)``, all counterclockwise with
    generation advanced by one; the refinement-edge labeling stays
    compatible with subsequent bisection.

    Parameters
    ----------
    mesh : Mesh

    Returns
    -------
    Mesh
    """
    vertices = list(mesh.vertices)
    midpoint_of: dict = {}
    record = {}
    for (a, b), els in sorted(mesh.edge_table.items()):
        vid = len(vertices)
        vert = _midpoint_vertex(mesh, vid, a, b, len(els) == 1)
        vertices.append(vert)
        midpoint_of[(a, b)] = vid
        record[vid] = (a, b)

    elements = []
    next_id = max(el.id for el in mesh.elements) + 1
    for el in mesh.elements:
        v0, v1, v2 = el.vertex_ids
        m01 = midpoint_of[_edge_key(v0, v1)]
        m02 = midpoint_of[_edge_key(v0, v2)]
        m12 = midpoint_of[_edge_key(v1, v2)]
        g = el.generation + 1
        for tri in ((v0, m01, m02), (m01, v1, m12), (m02, m12, v2), (m12, m02, m01)):
            elements.append(Element(next_id, tri, g))
            next_id += 1
    # renumber element ids contiguously in creation order
    elements = [Element(i, el.vertex_ids, el.generation) for i, el in enumerate(elements)]
    return Mesh(vertices, elements, curved=mesh.curved, _refinement_record=record)


class _Refiner:
    """Mutable working state for newest-vertex bisection with completion."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.vertices = list(mesh.vertices)
        self.elems = {
            el.id: (el.vertex_ids, el.generation) for el in mesh.elements
        }
        self.v2e: dict = {v.id: set() for v in mesh.vertices}
        for el in mesh.elements:
            for vid in el.vertex_ids:
                self.v2e[vid].add(el.id)
        self.next_eid = max(self.elems) + 1
        self.steps = []
        self.record = {}

    def refinement_edge(self, eid):
        vids, _ = self.elems[eid]
        return vids[1], vids[2]

    def edge_ring(self, a, b):
        return sorted(
            eid
            for eid in self.v2e[a] & self.v2e[b]
            if {a, b} <= set(self.elems[eid][0])
        )

    def _coords(self, vid):
        v = self.vertices[vid]
        return v.x, v.y

    def _area(self, eid):
        vids, _ = self.elems[eid]
        (x0, y0), (x1, y1), (x2, y2) = (self._coords(v) for v in vids)
        return 0.5 * abs((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0))

    def _patch(self, vid):
        eids = sorted(self.v2e[vid])
        area = sum(self._area(e) for e in eids)
        return eids, area

    def bisect_ring(self, a, b):
        """Bisect the (compatible) edge ``(a, b)`` and record the step."""
        ring = self.edge_ring(a, b)
        gens = {self.elems[eid][1] for eid in ring}
        if len(gens) != 1:
            raise InvalidMeshError(
                f"ring of edge ({a},{b}) mixes generations {sorted(gens)}"
            )
        for eid in ring:
            if set(self.refinement_edge(eid)) != {a, b}:
                raise InvalidMeshError(
                    f"edge ({a},{b}) bisected while not compatible"
                )
        gen_child = gens.pop() + 1

        mid = len(self.vertices)
        is_boundary = len(ring) == 1
        xa, ya = self._coords(a)
        xb, yb = self._coords(b)
        x, y = 0.5 * (xa + xb), 0.5 * (ya + yb)
        if is_boundary and self.mesh.curved == "unit-circle":
            r = math.hypot(x, y)
            x, y = x / r, y / r
        self.vertices.append(Vertex(mid, x, y, is_boundary))
        self.v2e[mid] = set()
        self.record[mid] = (a, b)

        for eid in ring:
            (v0, v1, v2), _ = self.elems[eid]
            for vid in (v0, v1, v2):
                self.v2e[vid].discard(eid)
            del self.elems[eid]
            for child in ((mid, v0, v1), (mid, v2, v0)):
                cid = self.next_eid
                self.next_eid += 1
                self.elems[cid] = (child, gen_child)
                for vid in child:
                    self.v2e[vid].add(cid)

        # local sizes measured on the mesh right after the step
        patch_eids, _ = self._patch(mid)
        pts = {mid}
        for eid in patch_eids:
            pts.update(self.elems[eid][0])
        plist = [self._coords(p) for p in sorted(pts)]
        h_j = max(
            math.hypot(px - qx, py - qy)
            for i, (px, py) in enumerate(plist)
            for (qx, qy) in plist[i + 1:]
        )
        scalings = {}
        counts = {}
        for q in (mid, max(a, b), min(a, b)):
            eids, area = self._patch(q)
            scalings[q] = math.sqrt(area / len(eids))
            counts[q] = len(eids)

        self.steps.append(
            BisectionStep(
                index=len(self.steps),
                endpoint_minus=min(a, b),
                endpoint_plus=max(a, b),
                midpoint=mid,
                generation=gen_child,
                ring_elements=tuple(ring),
                local_size=h_j,
                local_scalings=scalings,
                patch_counts=counts,
            )
        )

    def bisect_element(self, eid):
        """Bisect element ``eid``, recursively completing neighbors first."""
        guard = 0
        limit = 100 * (len(self.elems) + len(self.steps)) + 1000
        stack = [eid]
        while stack:
            guard += 1
            if guard > limit:
                raise InvalidMeshError(
                    "bisection completion did not terminate; labels malformed"
                )
            top = stack[-1]
            if top not in self.elems:
                stack.pop()
                continue
            a, b = self.refinement_edge(top)
            ring = self.edge_ring(a, b)
            blockers = [
                e for e in ring if set(self.refinement_edge(e)) != {a, b}
            ]
            if blockers:
                stack.extend(blockers)
            else:
                self.bisect_ring(a, b)

    def finish(self):
        elements = [
            Element(eid, vids, gen)
            for eid, (vids, gen) in sorted(self.elems.items())
        ]
        new_mesh = Mesh(
            self.vertices,
            elements,
            curved=self.mesh.curved,
            _refinement_record=self.record,
        )
        return new_mesh, self.steps


def bisect_marked(mesh, marked):
    """Bisect all marked elements, completing to a conforming mesh.

    Every marked element is bisected at least once; neighbors are
    recursively bisected first whenever the refinement edge is not yet
    shared as such (newest-vertex completion).  Each conforming edge split
    is recorded as a :class:`BisectionStep`, and replaying the returned
    steps reproduces the output mesh.  One step is recorded per new vertex.

    Parameters
    ----------
    mesh : Mesh
    marked : iterable of int
        Element ids to bisect.  Unknown ids raise ``InvalidMeshError``.

    Returns
    -------
    (Mesh, list of BisectionStep)

    Raises
    ------
    InvalidMeshError
        If refinement-edge labels are malformed (completion cannot
        terminate or rings mix generations).
    """
    marked = sorted(set(marked))
    known = {el.id for el in mesh.elements}
    for eid in marked:
        if eid not in known:
            raise InvalidMeshError(f"marked element {eid} not in mesh")
    if not marked:
        return mesh, []
    refiner = _Refiner(mesh)
    for eid in marked:
        if eid in refiner.elems:
            refiner.bisect_element(eid)
    return refiner.finish()


# ---------------------------------------------------------------------------
# marking, levels, stats
# ---------------------------------------------------------------------------

def boundary_corner_loop(mesh):
    """Closed CCW loop of boundary corner coordinates.

    Walks the boundary edges into a single closed loop, orients it
    counter-clockwise, and drops vertices where the loop does not turn,
    so the result depends on the domain geometry alone, not on how finely
    the boundary happens to be partitioned.

    Returns
    -------
    ndarray, shape (c + 1, 2)
        Corner coordinates with the first corner repeated at the end.
    """
    adj = {}
    for va, vb in mesh.boundary_edges:
        adj.setdefault(va, []).append(vb)
        adj.setdefault(vb, []).append(va)
    start = min(adj)
    loop = [start]
    prev = None
    cur = start
    while True:
        nbs = adj[cur]
        nxt = nbs[0] if nbs[0] != prev else nbs[1]
        if nxt == start:
            break
        loop.append(nxt)
        prev, cur = cur, nxt
    pts = mesh.coords[np.array(loop, dtype=np.int64)]
    area2 = float(
        np.sum(
            pts[:, 0] * np.roll(pts[:, 1], -1)
            - np.roll(pts[:, 0], -1) * pts[:, 1]
        )
    )
    if area2 < 0.0:
        pts = pts[::-1]
    scale = float(np.max(np.abs(pts))) or 1.0
    nb = len(pts)
    keep = []
    for i in range(nb):
        a = pts[i] - pts[(i - 1) % nb]
        b = pts[(i + 1) % nb] - pts[i]
        turn = a[0] * b[1] - a[1] * b[0]
        if abs(turn) > 1e-12 * scale * scale:
            keep.append(i)
    corners = pts[keep] if keep else pts
    return np.ascontiguousarray(
        np.vstack([corners, corners[:1]]), dtype=np.float64
    )


def _boundary_distances(mesh, points):
    """Distance from each point to the domain boundary."""
    if mesh.curved == "unit-circle":
        return 1.0 - np.linalg.norm(points, axis=1)
    corners = boundary_corner_loop(mesh)
    a = corners[:-1]
    b = corners[1:]
    ab = b - a  # (k, 2) with k = number of polygon sides
    denom = np.einsum("ij,ij->i", ab, ab)
    ap = points[:, None, :] - a[None, :, :]  # (m, k, 2)
    t = np.clip(np.einsum("mkj,kj->mk", ap, ab) / denom[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    d = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return d.min(axis=1)


def graded_mark(mesh, theta, mu):
    """Mark elements whose area exceeds the distance-graded threshold.

    An element ``tau`` is marked exactly when

        ``|tau| > theta * log(N) / N * d(x_tau)^(2*(mu-1)/mu)``

    where ``x_tau`` is the barycenter, ``d`` the Euclidean distance to the
    domain boundary, and ``N`` the current number of interior nodes.

    Parameters
    ----------
    mesh : Mesh
    theta : float
        Marking aggressiveness; must be > 1.
    mu : float
        Grading strength; must be >= 1 (``mu = 1`` is quasi-uniform).

    Returns
    -------
    set of int
        Ids of marked elements; deterministic and idempotent.

    Raises
    ------
    ValueError
        If ``theta <= 1``, ``mu < 1``, or the mesh has fewer than 2
        interior nodes (``log N`` would vanish).
    """
    if not theta > 1:
        raise ValueError("theta must be > 1")
    if not mu >= 1:
        raise ValueError("mu must be >= 1")
    n = mesh.num_interior
    if n < 2:
        raise ValueError("graded_mark needs at least 2 interior nodes")
    d = _boundary_distances(mesh, mesh.barycenters)
    thresh = theta * math.log(n) / n * d ** (2.0 * (mu - 1.0) / mu)
    marked = np.nonzero(mesh.areas > thresh)[0]
    return {mesh.elements[i].id for i in marked}


def compute_levels(mesh):
    """Vertex level: the maximal generation among adjacent elements.

    Returns
    -------
    dict
        Maps every vertex id to ``max(generation of elements in its ring)``.
    """
    levels = {v.id: 0 for v in mesh.vertices}
    for el in mesh.elements:
        for vid in el.vertex_ids:
            if el.generation > levels[vid]:
                levels[vid] = el.generation
    return levels


def mesh_stats(mesh):
    """Compute global size, shape-regularity, and ring statistics.

    Returns
    -------
    MeshStats
    """
    ev = mesh.element_vertices
    p0 = mesh.coords[ev[:, 0]]
    p1 = mesh.coords[ev[:, 1]]
    p2 = mesh.coords[ev[:, 2]]
    d01 = np.linalg.norm(p1 - p0, axis=1)
    d12 = np.linalg.norm(p2 - p1, axis=1)
    d20 = np.linalg.norm(p0 - p2, axis=1)
    diam = np.maximum(np.maximum(d01, d12), d20)
    semi = 0.5 * (d01 + d12 + d20)
    inradius = mesh.areas / semi

    gen_of = {el.id: el.generation for el in mesh.elements}
    k_star = 0
    for ring in mesh.vertex_rings().values():
        gens = [gen_of[e] for e in ring]
        k_star = max(k_star, max(gens) - min(gens), len(ring))
    return MeshStats(
        h_min=float(diam.min()),
        h_max=float(diam.max()),
        shape_regularity=float((diam / inradius).max()),
        k_star=int(k_star),
    )


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def save_mesh(mesh, path):
    """Write a mesh in the versioned ``fracbpx-mesh v1`` text format.

    Layout: header line, ``vertices <n>`` then one ``id x y boundary``
    line per vertex (17 significant digits), ``elements <m>`` then one
    ``id v0 v1 v2 generation`` line per element, where the refinement edge
    is ``(v1, v2)``.
    """
    lines = ["fracbpx-mesh v1", f"vertices {len(mesh.vertices)}"]
    for v in mesh.vertices:
        lines.append(f"{v.id} {v.x:.17g} {v.y:.17g} {1 if v.on_boundary else 0}")
    lines.append(f"elements {len(mesh.elements)}")
    for el in mesh.elements:
        v0, v1, v2 = el.vertex_ids
        lines.append(f"{el.id} {v0} {v1} {v2} {el.generation}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path):
    """Read a mesh written by :func:`save_mesh`.

    Raises
    ------
    InvalidMeshError
        If the header or structure does not match ``fracbpx-mesh v1``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        tokens = fh.read().split("\n")
    lines = [ln for ln in (t.strip() for t in tokens) if ln]
    if not lines or lines[0] != "fracbpx-mesh v1":
        raise InvalidMeshError("not a fracbpx-mesh v1 file")
    pos = 1
    if not lines[pos].startswith("vertices "):
        raise InvalidMeshError("missing vertices section")
    n = int(lines[pos].split()[1])
    pos += 1
    vertices = []
    for _ in range(n):
        sid, sx, sy, sb = lines[pos].split()
        vertices.append(Vertex(int(sid), float(sx), float(sy), sb == "1"))
        pos += 1
    if not lines[pos].startswith("elements "):
        raise InvalidMeshError("missing elements section")
    m = int(lines[pos].split()[1])
    pos += 1
    elements = []
    for _ in range(m):
        sid, s0, s1, s2, sg = lines[pos].split()
        elements.append(
            Element(int(sid), (int(s0), int(s1), int(s2)), int(sg))
        )
        pos += 1
    return Mesh(vertices, elements)
