"""Finite element melanoma phantoms and hybrid FEM/FDM backscatter simulation."""

from .errors import (
    CflViolation,
    ConfigError,
    DegenerateElement,
    LatticeMismatch,
    NonDivisibleExtent,
    UnknownMonth,
)
from .fdm import FdmGrid, apply_absorbing, apply_source, fdm_step
from .fem import FemState, FemSystem, assemble, fem_step
from .hybrid import (
    BoundaryRecord,
    CouplingMaps,
    HybridSimulation,
    SimulationConfig,
    build_coupling_maps,
    exchange,
    relative_l2,
    run_simulation,
)
from .io import read_boundary_series, read_config, write_boundary_series
from .mesh import MaterialField, TetraMesh, assign_materials, build_box_mesh, export_vtk, mesh_stats
from .phantom import (
    MONTHS,
    MelanomaModel,
    SkinPhantom,
    TissueKind,
    TissueProperties,
    analytic_tumor_volume,
    melanoma_model,
)

__version__ = "0.1.0"
