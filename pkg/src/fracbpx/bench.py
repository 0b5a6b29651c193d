"""Benchmark orchestration: iteration-count tables, convergence studies,
and numerical property verifications, emitted as deterministic CSV.

Each runner consumes an :class:`ExperimentSpec` and returns the CSV text
(also written to ``spec.out`` when set).  Rows follow the
:class:`ResultRow` schema; runs embed their full parameter provenance in
``#``-prefixed header comments so an emitted file is self-describing.

Output is byte-identical across repeated runs of the same spec and seed:
wall-clock times are recorded only when ``spec.timings`` is set (they are
written as 0.0 otherwise), and all randomness flows from ``spec.seed``.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.linalg

from .assembly import (
    DenseSymMatrix,
    QuadratureSpec,
    assemble_fractional_stiffness,
    assemble_h1_stiffness,
    assemble_load,
    assemble_mass,
)
from .hierarchy import (
    build_graded_hierarchy,
    build_uniform_hierarchy,
    l2_projection_chain,
)
from .mesh import bisect_marked, graded_mark, init_disk, init_square
from .precond import (
    DEFAULT_GAMMA_TILDE_GRADED,
    DEFAULT_GAMMA_TILDE_UNIFORM,
    bpx_graded,
    bpx_uniform,
)
from .solvers import cg, gauss_seidel, lanczos_cond, pcg

_KINDS = ("table-uniform", "table-graded", "convergence", "verify")
_SOLVERS = ("gs", "cg", "pcg")


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of one benchmark run.

    Parameters
    ----------
    kind : str
        One of ``table-uniform``, ``table-graded``, ``convergence``,
        ``verify``.
    s_values : tuple of float
        Fractional orders, each in (0, 1).
    gamma_tilde : float or None
        Coarse-correction parameter; ``None`` selects the family default
        (1/2 on uniform hierarchies, sqrt(2)/2 on graded ones).
    levels : int
        Number of uniform refinement levels, or a cap on graded stages;
        0 or negative means "as many stages as ``max_dofs`` allows".
    theta, mu : float
        Marking aggressiveness and grading strength for graded runs.
    quad : QuadratureSpec
        Assembly quadrature orders.
    solvers : tuple of str
        Subset of {"gs", "cg", "pcg"} to run per cell.
    tol : float
        Relative-residual stopping tolerance.
    out : str or None
        Output CSV path; the CSV text is also returned either way.
    seed : int
        RNG seed for the sampled verification checks.
    max_dofs : int
        Skip (and stop at) any mesh whose interior DOF count exceeds this.
    timings : bool
        Record wall-clock seconds per solve; off by default so that
        re-runs produce identical bytes.
    """

    kind: str
    s_values: tuple = (0.5,)
    gamma_tilde: float | None = None
    levels: int = 5
    theta: float = 4.0
    mu: float = 2.0
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    solvers: tuple = _SOLVERS
    tol: float = 1e-6
    out: str | None = None
    seed: int = 0
    max_dofs: int = 5000
    timings: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown experiment kind: {self.kind!r}")
        object.__setattr__(self, "s_values", tuple(float(s) for s in self.s_values))
        for s in self.s_values:
            if not 0.0 < s < 1.0:
                raise ValueError(f"s must lie in (0, 1), got {s}")
        if self.gamma_tilde is not None and not 0.0 <= self.gamma_tilde < 1.0:
            raise ValueError("gamma_tilde must lie in [0, 1)")
        object.__setattr__(self, "solvers", tuple(self.solvers))
        for name in self.solvers:
            if name not in _SOLVERS:
                raise ValueError(f"unknown solver: {name!r}")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.theta <= 1.0:
            raise ValueError("theta must be > 1")
        if self.mu < 1.0:
            raise ValueError("mu must be >= 1")
        if self.max_dofs < 1:
            raise ValueError("max_dofs must be >= 1")


@dataclass
class ResultRow:
    """One emitted measurement.

    ``residual`` doubles as the generic scalar slot for the verification
    checks (each ``verify`` row stores its measured ratio there);
    ``cond_estimate`` and ``energy_error`` are filled only by the
    experiments that produce them.
    """

    experiment: str
    stage: int
    dofs: int
    s: float
    gamma_tilde: float | None
    solver: str
    precond: str
    iterations: int | None
    residual: float | None
    cond_estimate: float | None = None
    energy_error: float | None = None
    wall_time: float = 0.0


_CSV_FIELDS = tuple(f.name for f in fields(ResultRow))


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_csv(spec, rows):
    buf = io.StringIO()
    buf.write("# fracbpx results\n")
    buf.write(f"# kind={spec.kind}\n")
    buf.write(f"# s={','.join(repr(s) for s in spec.s_values)}\n")
    buf.write(f"# gamma_tilde={'default' if spec.gamma_tilde is None else repr(spec.gamma_tilde)}\n")
    buf.write(f"# levels={spec.levels}\n")
    buf.write(f"# theta={spec.theta!r} mu={spec.mu!r}\n")
    buf.write(
        f"# quad={spec.quad.gauss_order},{spec.quad.singular_order}"
        f" ball_radius_factor={spec.quad.ball_radius_factor!r}\n"
    )
    buf.write(f"# solvers={','.join(spec.solvers)}\n")
    buf.write(f"# tol={spec.tol!r}\n")
    buf.write(f"# seed={spec.seed}\n")
    buf.write(f"# max_dofs={spec.max_dofs}\n")
    buf.write(",".join(_CSV_FIELDS) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(getattr(row, name)) for name in _CSV_FIELDS) + "\n")
    return buf.getvalue()


def _finish(spec, rows):
    text = _render_csv(spec, rows)
    if spec.out is not None:
        with open(spec.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def _clock(spec, t0):
    return time.perf_counter() - t0 if spec.timings else 0.0


def graded_stage_meshes(theta, mu, max_dofs, stage_cap=0, initial=None):
    """Generate the graded refinement family stage by stage.

    One stage is one marked-bisection pass: elements violating the
    distance-graded size threshold are bisected (with conforming
    completion).  While the mesh has fewer than 2 interior nodes, or when
    a pass marks nothing, the stage bisects every element instead so the
    family keeps advancing.

    Yields ``(stage_index, mesh, history)`` where ``history`` is the full
    bisection-step list from the initial mesh to this stage's mesh (an
    independent snapshot, safe to keep after the generator advances).
    Generation stops before any stage whose mesh would exceed
    ``max_dofs`` interior nodes, or after ``stage_cap`` stages when
    ``stage_cap`` is positive.
    """
    mesh = init_square() if initial is None else initial
    history = []
    stage = 0
    while True:
        if stage_cap > 0 and stage >= stage_cap:
            return
        if mesh.num_interior < 2:
            marked = [el.id for el in mesh.elements]
        else:
            marked = sorted(graded_mark(mesh, theta, mu))
            if not marked:
                marked = [el.id for el in mesh.elements]
        nxt, steps = bisect_marked(mesh, marked)
        if nxt.num_interior > max_dofs:
            return
        mesh = nxt
        history.extend(steps)
        stage += 1
        yield stage, mesh, list(history)


def _solver_rows(spec, experiment, stage, mesh, s, K, b, make_bpx, gamma_tilde):
    """Run the spec's solver set on one assembled cell and build rows."""
    rows = []
    n = mesh.num_interior
    for name in spec.solvers:
        if name == "gs":
            t0 = time.perf_counter()
            _, rep = gauss_seidel(K, b, tol=spec.tol)
            rows.append(
                ResultRow(experiment, stage, n, s, None, "gs", "none",
                          rep.iterations, rep.final_relative_residual,
                          wall_time=_clock(spec, t0))
            )
        elif name == "cg":
            t0 = time.perf_counter()
            _, rep = cg(K, b, tol=spec.tol)
            rows.append(
                ResultRow(experiment, stage, n, s, None, "cg", "none",
                          rep.iterations, rep.final_relative_residual,
                          wall_time=_clock(spec, t0))
            )
        elif name == "pcg":
            for gt in (gamma_tilde, 0.0):
                P = make_bpx(gt)
                t0 = time.perf_counter()
                _, rep = pcg(K, P, b, tol=spec.tol)
                rows.append(
                    ResultRow(experiment, stage, n, s, gt, "pcg", "bpx",
                              rep.iterations, rep.final_relative_residual,
                              wall_time=_clock(spec, t0))
                )
                if gamma_tilde == 0.0:
                    break  # the variant would duplicate the main run
    return rows


def run_table_uniform(spec):
    """Iteration counts of GS/CG/PCG on uniformly refined square meshes.

    For each level and fractional order: assemble the stiffness matrix
    and the constant-1 load, then run the requested solvers.  PCG runs
    twice, once with the requested coarse-correction parameter and once
    with gamma_tilde = 0, so the correction's effect is visible in one
    table.
    """
    levels = spec.levels if spec.levels > 0 else 5
    gt = DEFAULT_GAMMA_TILDE_UNIFORM if spec.gamma_tilde is None else spec.gamma_tilde
    T0 = init_square()
    rows = []
    try:
        for J in range(1, levels + 1):
            hier = build_uniform_hierarchy(T0, J)
            mesh = hier.meshes[-1]
            if mesh.num_interior > spec.max_dofs:
                break
            b = assemble_load(mesh, 1.0)
            for s in spec.s_values:
                K = assemble_fractional_stiffness(mesh, s, spec.quad)
                rows.extend(
                    _solver_rows(
                        spec, "table-uniform", J, mesh, s, K, b,
                        lambda g, h=hier, s=s: bpx_uniform(h, s, g), gt,
                    )
                )
    except Exception:
        _finish(spec, rows)
        raise
    return _finish(spec, rows)


def run_table_graded(spec):
    """Iteration counts of GS/CG/PCG along the graded bisection family.

    Stages come from :func:`graded_stage_meshes` with the spec's theta
    and mu; each stage assembles and solves exactly like the uniform
    table but preconditions with the graded BPX operator.
    """
    gt = DEFAULT_GAMMA_TILDE_GRADED if spec.gamma_tilde is None else spec.gamma_tilde
    rows = []
    try:
        for stage, mesh, history in graded_stage_meshes(
            spec.theta, spec.mu, spec.max_dofs, stage_cap=spec.levels
        ):
            gh = build_graded_hierarchy(mesh, history)
            b = assemble_load(mesh, 1.0)
            for s in spec.s_values:
                K = assemble_fractional_stiffness(mesh, s, spec.quad)
                rows.extend(
                    _solver_rows(
                        spec, "table-graded", stage, mesh, s, K, b,
                        lambda g, gh=gh, s=s: bpx_graded(gh, s, g), gt,
                    )
                )
    except Exception:
        _finish(spec, rows)
        raise
    return _finish(spec, rows)


def disk_exact_energy(s):
    """Squared energy norm of the exact unit-disk solution for f = 1.

    The solution is ``u(x) = c_s (1 - |x|^2)^s`` with
    ``c_s = 1 / (4^s * Gamma(1+s)^2)``; its squared energy equals the
    load functional ``int_Omega u = pi * c_s / (1 + s)``.
    """
    c = 1.0 / (4.0 ** s * math.gamma(1.0 + s) ** 2)
    return math.pi * c / (1.0 + s)


def run_convergence(spec):
    """Energy-error convergence on the unit disk for f = 1.

    Emits one row per refinement level (uniform family) and per graded
    stage (mu-graded family): the PCG-solved discrete energy is compared
    against the closed-form exact energy, recording
    ``energy_error = sqrt(|u|^2 - |u_h|^2)``.
    """
    levels = spec.levels if spec.levels > 0 else 5
    rows = []
    base = init_disk(0.8)
    try:
        for J in range(0, levels + 1):
            hier = build_uniform_hierarchy(base, J)
            mesh = hier.meshes[-1]
            if mesh.num_interior > spec.max_dofs:
                break
            b = assemble_load(mesh, 1.0)
            gt = DEFAULT_GAMMA_TILDE_UNIFORM if spec.gamma_tilde is None else spec.gamma_tilde
            for s in spec.s_values:
                K = assemble_fractional_stiffness(mesh, s, spec.quad)
                P = bpx_uniform(hier, s, gt)
                t0 = time.perf_counter()
                x, rep = pcg(K, P, b, tol=spec.tol)
                err2 = disk_exact_energy(s) - float(x @ K.matvec(x))
                rows.append(
                    ResultRow("convergence-uniform", J, mesh.num_interior, s, gt,
                              "pcg", "bpx", rep.iterations,
                              rep.final_relative_residual,
                              energy_error=math.sqrt(max(err2, 0.0)),
                              wall_time=_clock(spec, t0))
                )
        for stage, mesh, history in graded_stage_meshes(
            spec.theta, spec.mu, spec.max_dofs, initial=init_disk(0.8)
        ):
            gh = build_graded_hierarchy(mesh, history)
            b = assemble_load(mesh, 1.0)
            gt = DEFAULT_GAMMA_TILDE_GRADED if spec.gamma_tilde is None else spec.gamma_tilde
            for s in spec.s_values:
                K = assemble_fractional_stiffness(mesh, s, spec.quad)
                P = bpx_graded(gh, s, gt)
                t0 = time.perf_counter()
                x, rep = pcg(K, P, b, tol=spec.tol)
                err2 = disk_exact_energy(s) - float(x @ K.matvec(x))
                rows.append(
                    ResultRow("convergence-graded", stage, mesh.num_interior, s, gt,
                              "pcg", "bpx", rep.iterations,
                              rep.final_relative_residual,
                              energy_error=math.sqrt(max(err2, 0.0)),
                              wall_time=_clock(spec, t0))
                )
    except Exception:
        _finish(spec, rows)
        raise
    return _finish(spec, rows)


def _element_l2_weights(mesh, v, s):
    """``sum_tau diam(tau)^(-2s) * int_tau v^2`` for a P1 coefficient
    vector v over interior DOFs (zero on the boundary)."""
    dof = mesh.dof_index
    vv = np.zeros(len(mesh.vertices))
    for vid in range(len(mesh.vertices)):
        if dof[vid] >= 0:
            vv[vid] = v[dof[vid]]
    vals = vv[mesh.element_vertices]  # (m, 3)
    # element mass quadratic form: area/12 * (sum v_i)^2 + area/12 * sum v_i^2
    q = (vals.sum(axis=1) ** 2 + (vals ** 2).sum(axis=1)) * mesh.areas / 12.0
    return float(np.sum(mesh.diameters ** (-2.0 * s) * q))


def run_verify(spec):
    """Numerical property checks behind the preconditioner theory.

    Emits, per level count and fractional order:

    - ``norm-equivalence``: ratio of the telescoping multilevel sum
      ``sum_k h_k^(-2s) ||(Q_k - Q_{k-1}) v||_M^2`` to the energy
      ``v^T K v`` over seeded random vectors.
    - ``inverse-inequality``: ratio of ``|v|_K`` to the elementwise
      scaled L2 norm ``(sum_tau h_tau^(-2s) ||v||^2_{L2(tau)})^(1/2)``.
    - ``strengthened-cauchy-schwarz``: normalized cross-level energy
      products over random coarse/fine pairs.
    - ``spectral-equivalence``: Lanczos cond(P * A_spec) where A_spec is
      the dense spectral fractional Laplacian built from the Dirichlet
      eigenpairs, next to cond(P * K) for reference.
    """
    levels = min(spec.levels if spec.levels > 0 else 5, 8)
    gt = DEFAULT_GAMMA_TILDE_UNIFORM if spec.gamma_tilde is None else spec.gamma_tilde
    rng = np.random.default_rng(spec.seed)
    samples = 20
    T0 = init_square()
    rows = []
    try:
        for J in range(2, levels + 1):
            hier = build_uniform_hierarchy(T0, J)
            mesh = hier.meshes[-1]
            n = mesh.num_interior
            if n > spec.max_dofs:
                break
            M = assemble_mass(mesh)
            for s in spec.s_values:
                K = assemble_fractional_stiffness(mesh, s, spec.quad)
                A = np.asarray(K)
                for i in range(samples):
                    v = rng.standard_normal(n)
                    slices = l2_projection_chain(hier, M, v)
                    num = sum(
                        hier.level_sizes[k] ** (-2.0 * s) * float(w @ (M @ w))
                        for k, w in enumerate(slices)
                    )
                    den = float(v @ (A @ v))
                    rows.append(
                        ResultRow("verify", J, n, s, None, "norm-equivalence",
                                  "none", i, num / den)
                    )
                    rows.append(
                        ResultRow("verify", J, n, s, None, "inverse-inequality",
                                  "none", i,
                                  math.sqrt(den / _element_l2_weights(mesh, v, s)))
                    )
                for k in range(hier.depth):
                    for l in range(k + 1, hier.depth + 1):
                        uk = rng.standard_normal(hier.meshes[k].num_interior)
                        ul = rng.standard_normal(hier.meshes[l].num_interior)
                        vk = hier.prolongations[k] @ uk
                        vl = hier.prolongations[l] @ ul
                        cross = abs(float(vk @ (A @ vl)))
                        ek = math.sqrt(float(vk @ (A @ vk)))
                        ml = math.sqrt(float(vl @ (M @ vl)))
                        denom = (
                            0.5 ** (s * (l - k))
                            * hier.level_sizes[l] ** (-s) * ek * ml
                        )
                        rows.append(
                            ResultRow("verify", J, n, s, None,
                                      "strengthened-cauchy-schwarz", "none",
                                      l - k, cross / denom)
                        )
                if n <= 1000:
                    K1 = assemble_h1_stiffness(mesh).toarray()
                    Md = M.toarray()
                    lam, phi = scipy.linalg.eigh(K1, Md)
                    a_spec = Md @ (phi * lam ** s) @ phi.T @ Md
                    a_spec = 0.5 * (a_spec + a_spec.T)
                    P = bpx_uniform(hier, s, gt)
                    ce_spec = lanczos_cond(DenseSymMatrix(a_spec), precond=P)
                    ce_K = lanczos_cond(K, precond=P)
                    rows.append(
                        ResultRow("verify", J, n, s, gt, "spectral-equivalence",
                                  "bpx", ce_spec.lanczos_steps, None,
                                  cond_estimate=ce_spec.cond)
                    )
                    rows.append(
                        ResultRow("verify", J, n, s, gt, "spectral-reference",
                                  "bpx", ce_K.lanczos_steps, None,
                                  cond_estimate=ce_K.cond)
                    )
    except Exception:
        _finish(spec, rows)
        raise
    return _finish(spec, rows)


_RUNNERS = {
    "table-uniform": run_table_uniform,
    "table-graded": run_table_graded,
    "convergence": run_convergence,
    "verify": run_verify,
}


def run(spec):
    """Dispatch a spec to its runner and return the CSV text."""
    return _RUNNERS[spec.kind](spec)
