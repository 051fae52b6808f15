"""Frequency-domain A-Phi Maxwell solver on tetrahedral meshes.

Discrete exterior calculus with Galerkin (Whitney) Hodge stars and the
generalized Lorenz gauge.
"""

from .assembly import (
    EigenResult,
    SolveContext,
    SystemMatrix,
    assemble_A_system,
    assemble_Phi_system,
    assemble_pbc_eigen,
    solve_eigen,
    solve_linear,
)
from .boundary import (
    BlochSpec,
    apply_pec,
    build_pbc_projection,
    classify_boundary,
)
from .config import RunConfig, load_config, parse_config
from .dual import DualMesh, build_dual, dual_incidence
from .io import BoxMeshSpec, generate_box_mesh, import_msh
from .materials import Region, build_source, make_port, material_map, port_from_points, resolve_materials
from .mesh import IncidenceSet, SimplicialComplex, build_complex, build_incidence, validate_complex
from .postprocess import extract_port, recover_fields, recover_phi_from_gauge, verify_maxwell
from .runner import prepare, run_bands, run_sweep, solve_point
from .whitney import HodgeSet, assemble_hodges, barycentric_gradients, eval_whitney

__version__ = "0.1.0"
