"""Hybrid FEM/FDM domain decomposition and the forward-simulation driver.

The FEM mesh covers the phantom box; the FDM lattice covers the larger
vacuum box and shares its nodes with the mesh.  Each time step runs

1. FDM interior update, absorbing faces and source (values at n+1);
2. FEM update, with mesh-boundary nodes taking the FDM values at n+1;
3. exchange: the FDM overlap layer (first lattice layer inside the mesh)
   takes the FEM values at n+1;
4. recording of the FEM field on the top face of the mesh.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, LatticeMismatch
from .fdm import SOURCE_MODES, FdmGrid, apply_absorbing, apply_source, fdm_step, source_active
from .fem import FemState, FemStepper, FemSystem, assemble
from .mesh import MaterialField, TetraMesh, assign_materials, build_box_mesh, export_vtk
from .phantom import SkinPhantom, melanoma_model

log = logging.getLogger(__name__)

HYBRID_BOX = (-2.0, 12.0)
FEM_BOX = (0.0, 10.0)
FEM_BOX_3D = ((0.0, 0.0, 0.0), (10.0, 10.0, 10.0))


@dataclass(frozen=True)
class CouplingMaps:
    fem_to_lattice: np.ndarray  # flat lattice index of every FEM node
    fem_interface: np.ndarray  # FEM interface node ids
    interface_lattice: np.ndarray  # lattice index of each interface node
    overlap_lattice: np.ndarray  # lattice index of each overlap node
    overlap_fem: np.ndarray  # FEM node id of each overlap node


def build_coupling_maps(mesh: TetraMesh, grid: FdmGrid, interface_nodes=None) -> CouplingMaps:
    """Match mesh nodes with lattice nodes; raise ``LatticeMismatch`` if they do not coincide."""
    if abs(mesh.h - grid.h) > 1e-12 * grid.h:
        raise LatticeMismatch(f"mesh h={mesh.h} differs from lattice h={grid.h}")
    frac = grid.index_of(mesh.nodes)
    ijk = np.rint(frac).astype(np.int64)
    off = np.max(np.abs(frac - ijk)) if len(frac) else 0.0
    if off * grid.h > 1e-9 * grid.h:
        raise LatticeMismatch(f"mesh nodes are off the FDM lattice by up to {off * grid.h:.3g}")
    if np.any(ijk < 0) or np.any(ijk >= grid.n):
        raise LatticeMismatch("mesh extends beyond the FDM lattice")
    fem_to_lattice = np.ravel_multi_index(ijk.T, grid.shape)

    if interface_nodes is None:
        interface_nodes = mesh.boundary_nodes()
    interface_nodes = np.asarray(interface_nodes, dtype=np.int64)

    overlap_lattice = np.flatnonzero(grid.overlap)
    lookup = np.full(grid.node_count, -1, dtype=np.int64)
    lookup[fem_to_lattice] = np.arange(mesh.n_nodes)
    overlap_fem = lookup[overlap_lattice]
    if np.any(overlap_fem < 0):
        raise LatticeMismatch("FDM overlap layer contains nodes that are not mesh nodes")
    return CouplingMaps(fem_to_lattice, interface_nodes, fem_to_lattice[interface_nodes],
                        overlap_lattice, overlap_fem)


def _flat(arr: np.ndarray) -> np.ndarray:
    return arr.reshape(3, -1)


def exchange(fem_state: FemState, grid: FdmGrid, maps: CouplingMaps):
    """Swap values at step n+1: FEM interface <- FDM, FDM overlap <- FEM."""
    fdm = _flat(grid.E_curr)
    fem_state.E_curr[maps.fem_interface] = fdm[:, maps.interface_lattice].T
    fdm[:, maps.overlap_lattice] = fem_state.E_curr[maps.overlap_fem].T


@dataclass
class SimulationConfig:
    month: int
    h: float = 0.5
    tau: float = 0.05
    T: float = 30.0
    omega: float = 40.0
    amplitude: float = 1.0
    scaling_factor: float = 5.0
    stage_thresholds: tuple[float, float] = (1.0, 3.5)
    snapshot_stride: int = 100
    record_stride: int = 1
    out: str | None = None
    source: str = "incident"
    vacuum: bool = False

    def __post_init__(self):
        melanoma_model(self.month)
        self.stage_thresholds = tuple(float(v) for v in self.stage_thresholds)
        if self.h <= 0:
            raise ConfigError(f"h: must be positive, got {self.h}")
        bound = 0.5 * self.h / math.sqrt(3.0)
        if not 0 < self.tau <= bound * (1 + 1e-12):
            raise ConfigError(f"tau: {self.tau} violates 0 < tau <= h/(2 sqrt 3) = {bound:.6g}")
        if not self.T > 0:
            raise ConfigError(f"T: must be positive, got {self.T}")
        for key in ("snapshot_stride", "record_stride"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{key}: must be an integer >= 1, got {v!r}")
        if self.omega <= 0:
            raise ConfigError(f"omega: must be positive, got {self.omega}")
        if self.scaling_factor <= 0:
            raise ConfigError(f"scaling_factor: must be positive, got {self.scaling_factor}")
        if self.source not in SOURCE_MODES:
            raise ConfigError(f"source: must be one of {SOURCE_MODES}, got {self.source!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.tau))

    def phantom(self) -> SkinPhantom:
        return SkinPhantom(
            tumor=melanoma_model(self.month),
            stage_thresholds=self.stage_thresholds,
            scaling_factor=self.scaling_factor,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_thresholds"] = list(self.stage_thresholds)
        return d


@dataclass
class BoundaryRecord:
    """FEM field on the top face of the mesh, one row per recorded step."""

    node_ids: np.ndarray
    coords: np.ndarray
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        """Array of shape (steps, nodes, 3)."""
        if not self.rows:
            return np.zeros((0, len(self.node_ids), 3))
        return np.stack(self.rows)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def append(self, t: float, E: np.ndarray):
        self.times.append(float(t))
        self.rows.append(np.array(E[self.node_ids], dtype=float))


def top_face_nodes(mesh: TetraMesh) -> np.ndarray:
    """Mesh nodes on the top face, in node-number (x2, x1 lexicographic) order."""
    top = mesh.hi[2]
    return np.nonzero(np.abs(mesh.nodes[:, 2] - top) < 1e-9 * mesh.h)[0]


def relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b|| / max(||a||, ||b||)``; zero when both vanish."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)


class HybridSimulation:
    """Owns the coupled solvers; :meth:`step` advances both by one ``tau``."""

    def __init__(self, config: SimulationConfig, mesh: TetraMesh | None = None,
                 field: MaterialField | None = None):
        self.config = config
        self.mesh = mesh if mesh is not None else build_box_mesh(FEM_BOX_3D, config.h)
        if field is None:
            field = (MaterialField.uniform(self.mesh.n_tets) if config.vacuum
                     else assign_materials(self.mesh, config.phantom()))
        self.field = field
        self.system: FemSystem = assemble(self.mesh, field)
        self.grid = FdmGrid(HYBRID_BOX[0], HYBRID_BOX[1], config.h, fem_box=FEM_BOX)
        self.maps = build_coupling_maps(self.mesh, self.grid, self.system.interface_nodes)
        self.state = FemState.zeros(self.mesh.n_nodes, config.tau)
        self.stepper = FemStepper(self.system, config.tau)
        self.record = BoundaryRecord(top_face_nodes(self.mesh), None)
        self.record.coords = self.mesh.nodes[self.record.node_ids]
        self.max_abs = 0.0

    @property
    def t(self) -> float:
        return self.state.t

    def step(self):
        cfg = self.config
        tau = cfg.tau
        grid = self.grid
        t_next = (grid.step_count + 1) * tau
        fdm_step(grid, tau)
        dirichlet_on = cfg.source == "dirichlet" and source_active(t_next, cfg.omega)
        apply_absorbing(grid, tau, skip_source_face=dirichlet_on)
        apply_source(grid, t_next, cfg.omega, cfg.amplitude, tau=tau, mode=cfg.source)
        grid.commit(tau)
        boundary = _flat(grid.E_curr)[:, self.maps.interface_lattice].T
        self.stepper.step(self.state, boundary)
        exchange(self.state, grid, self.maps)
        self.max_abs = max(self.max_abs, float(np.max(np.abs(grid.E_curr))),
                           float(np.max(np.abs(self.state.E_curr))))

    def lattice_field(self, level: str = "curr") -> np.ndarray:
        """FDM lattice field with every mesh node overwritten by the FEM value."""
        fdm = getattr(self.grid, f"E_{level}").copy()
        fem = getattr(self.state, f"E_{level}")
        _flat(fdm)[:, self.maps.fem_to_lattice] = fem.T
        return fdm

    def energy(self) -> float:
        """Lattice leapfrog energy of the combined field (meaningful for vacuum runs)."""
        return self.grid.energy(self.lattice_field("prev"), self.lattice_field("curr"), self.config.tau)


@dataclass
class SimulationResult:
    record: BoundaryRecord
    snapshots: list
    steps: int
    max_abs: float
    wall_time: float
    simulation: HybridSimulation | None = None


def run_simulation(config: SimulationConfig, keep_state: bool = False) -> SimulationResult:
    """Run the forward problem and, if ``config.out`` is set, write its outputs.

    On a failure the partial record is flushed next to a ``FAILED`` marker and
    the exception propagates.
    """
    from .io import write_boundary_series

    start = time.perf_counter()
    sim = HybridSimulation(config)
    out = Path(config.out) if config.out else None
    snapshots = []
    try:
        for n in range(config.n_steps):
            sim.step()
            step = n + 1
            if step % config.record_stride == 0:
                sim.record.append(sim.t, sim.state.E_curr)
            if out is not None and step % config.snapshot_stride == 0:
                path = out / "snapshots" / f"E_{step:06d}.vtk"
                export_vtk(sim.mesh, sim.field, path, E=sim.state.E_curr, title=f"t={sim.t!r}")
                snapshots.append(path)
    except Exception as exc:
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            write_boundary_series(sim.record, out, config)
            (out / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        raise
    if out is not None:
        write_boundary_series(sim.record, out, config)
    wall = time.perf_counter() - start
    log.info("month %s: %d steps, max|E|=%.4g, %.1fs", config.month, config.n_steps, sim.max_abs, wall)
    return SimulationResult(sim.record, snapshots, config.n_steps, sim.max_abs, wall,
                            sim if keep_state else None)
