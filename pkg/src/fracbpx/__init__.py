"""fracbpx: multilevel preconditioning for integral fractional diffusion.

The package assembles piecewise-linear finite element matrices for the
integral fractional Laplacian on 2D triangulations, builds uniform and
bisection-graded mesh hierarchies, and provides optimal multilevel (BPX)
preconditioners together with Krylov solvers and benchmarking utilities.
"""

from .mesh import (
    BisectionStep,
    Element,
    InvalidMeshError,
    Mesh,
    MeshStats,
    Vertex,
    bisect_marked,
    compute_levels,
    graded_mark,
    init_disk,
    init_square,
    load_mesh,
    mesh_stats,
    save_mesh,
    uniform_refine,
)

from .assembly import (
    DenseSymMatrix,
    FractionalConstant,
    OperatorMode,
    QuadratureSpec,
    assemble_fractional_stiffness,
    assemble_h1_stiffness,
    assemble_load,
    assemble_mass,
    constant_Cds,
    load_matrix,
    save_matrix,
)

from .hierarchy import (
    GradedHierarchy,
    UniformHierarchy,
    build_graded_hierarchy,
    build_uniform_hierarchy,
    fine_node_scalings,
    l2_projection_chain,
    triplet_columns,
    two_level_prolongation,
)

from .precond import (
    DEFAULT_GAMMA_TILDE_GRADED,
    DEFAULT_GAMMA_TILDE_UNIFORM,
    Preconditioner,
    bpx_graded,
    bpx_uniform,
    diag_scaling,
)

from .solvers import (
    CondEstimate,
    SolveReport,
    cg,
    gauss_seidel,
    lanczos_cond,
    pcg,
)

from .bench import (
    ExperimentSpec,
    ResultRow,
    disk_exact_energy,
    graded_stage_meshes,
    run,
    run_convergence,
    run_table_graded,
    run_table_uniform,
    run_verify,
)

__version__ = "0.1.0"
