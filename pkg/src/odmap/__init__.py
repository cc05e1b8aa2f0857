"""Discrete complex analysis on orthodiagonal maps.

Construction (grids, circle packings, double circle packings), validation,
the canonical-weight discrete Dirichlet solver, the electric-network
flow/energy calculus, explicit low-energy flows, and a convergence harness
against closed-form harmonic functions.
"""

from .core_map import (
    AugmentedDuals,
    OrthodiagonalMap,
    ValidationReport,
    augmented_duals,
    blocks,
    martingale_residuals,
    orientation_residuals,
    validate,
)
from .domains import DomainSpec, hausdorff_delta, unit_disk, unit_square
from .dirichlet import (
    CATALOG,
    SweepRecord,
    TestFunction,
    convergence_sweep,
    energy_convergence_check,
    energy_pair_check,
    exit_measure_vs_arcs,
    get_test_function,
    poisson_arc_masses,
    solve_dirichlet,
    sup_error,
    theorem_shape,
    write_sweep_csv,
)
from .errors import (
    DegenerateFaceError,
    DisconnectedNetworkError,
    GeometryError,
    PackingError,
    RhoPathError,
    StructuralError,
)
from .flows import (
    FlowReport,
    RhoEdgeSet,
    argument_field,
    argument_flow,
    equicontinuity_probe,
    random_path_flow,
    rho_edges,
    rho_path,
)
from .generators import (
    GeneratorSpec,
    build_generator_level,
    clip_to_domain,
    cube_map,
    diamond_map,
    k4_map,
    octahedron_map,
    perturbed,
    prism_map,
    random_delaunay_triangulation,
    rect_nonuniform,
    rotated_grid,
    triangular_disk_triangulation,
)
from .network import (
    DirichletProblem,
    EdgeField,
    Network,
    VertexFunction,
    cycle_law_residuals,
    dirichlet_thomson_check,
    discrete_gradient,
    energy,
    energy_of_function,
    gap,
    harmonic_extension,
    harmonic_residuals,
    inner_r,
    node_law_residuals,
    project_to_current,
    random_walk_exit_measure,
    sandwich_check,
    star_cycle_decomposition,
    strength,
)
from .packing import (
    CirclePacking,
    DoubleCirclePacking,
    PlanarMap3C,
    Triangulation,
    double_pack,
    orthodiagonal_from_double_packing,
    orthodiagonal_from_packing,
    pack_in_disk,
    packing_svg,
    triangulation_from_points,
)
from .geometry import incircle

__version__ = "0.1.0"
