"""Structured tetrahedral meshes of axis-aligned boxes.

Every lattice cube of edge ``h`` is cut into six tetrahedra sharing the
cube's main diagonal (Kuhn / Freudenthal subdivision).  The cut is identical
in every cube, so neighbouring cubes always agree on the split of their
common face.

Nodes are numbered lexicographically with x1 running fastest, then x2, then
x3.  File formats: legacy ASCII VTK for visualisation and a small
little-endian binary cache (magic ``MMFE1``) for reuse by the solvers.
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateElement, NonDivisibleExtent
from .phantom import SkinPhantom, TissueKind

VTK_TETRA = 10
BINARY_MAGIC = b"MMFE1"

# local face f is the triangle opposite local vertex f
LOCAL_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])

Box = tuple[tuple[float, float, float], tuple[float, float, float]]


def _kuhn_template() -> np.ndarray:
    """Six positively oriented tets of the unit cube as (6, 4, 3) corner offsets."""
    tets = []
    for perm in itertools.permutations(range(3)):
        corner = np.zeros(3, dtype=np.int64)
        verts = [corner.copy()]
        for axis in perm:
            corner[axis] += 1
            verts.append(corner.copy())
        verts = np.array(verts)
        if np.linalg.det((verts[1:] - verts[0]).astype(float)) < 0:
            verts[[2, 3]] = verts[[3, 2]]
        tets.append(verts)
    return np.array(tets)


KUHN_TEMPLATE = _kuhn_template()


@dataclass
class TetraMesh:
    nodes: np.ndarray  # (n, 3) float
    tets: np.ndarray  # (m, 4) int64
    h: float
    lo: np.ndarray  # box corner
    counts: tuple[int, int, int]  # cubes per axis

    def __post_init__(self):
        self._boundary_faces = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.h * np.asarray(self.counts)

    @property
    def lattice_shape(self) -> tuple[int, int, int]:
        return tuple(c + 1 for c in self.counts)

    def lattice_index(self) -> np.ndarray:
        """Integer (i, j, k) lattice coordinates of every node."""
        return np.rint((self.nodes - self.lo) / self.h).astype(np.int64)

    def signed_volumes(self) -> np.ndarray:
        x = self.nodes[self.tets]
        return np.linalg.det(x[:, 1:] - x[:, :1]) / 6.0

    def centroids(self) -> np.ndarray:
        return self.nodes[self.tets].mean(axis=1)

    def face_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unique faces (sorted node triples), owner counts and the inverse map.

        The inverse has shape (m, 4): entry ``[t, f]`` indexes the unique face
        that is local face ``f`` of tet ``t``.
        """
        faces = np.sort(self.tets[:, LOCAL_FACES].reshape(-1, 3), axis=1)
        unique, inverse, counts = np.unique(faces, axis=0, return_inverse=True, return_counts=True)
        return unique, counts, inverse.reshape(-1, 4)

    @property
    def boundary_faces(self) -> np.ndarray:
        """Rows ``(tet, local_face, tag)``; ``tag = 2 * axis + (0 low | 1 high)``."""
        if self._boundary_faces is None:
            _, counts, inverse = self.face_table()
            tet, local = np.nonzero(counts[inverse] == 1)
            verts = self.nodes[self.tets[tet[:, None], LOCAL_FACES[local]]]
            tags = np.full(len(tet), -1, dtype=np.int64)
            for axis in range(3):
                for side, bound in enumerate((self.lo[axis], self.hi[axis])):
                    on = np.all(np.abs(verts[:, :, axis] - bound) < 1e-9 * self.h, axis=1)
                    tags[on] = 2 * axis + side
            self._boundary_faces = np.column_stack([tet, local, tags])
        return self._boundary_faces

    def boundary_nodes(self) -> np.ndarray:
        """Sorted ids of nodes on faces owned by a single tet."""
        bf = self.boundary_faces
        return np.unique(self.tets[bf[:, 0][:, None], LOCAL_FACES[bf[:, 1]]])

    def boundary_node_mask(self) -> np.ndarray:
        ijk = self.lattice_index()
        counts = np.asarray(self.counts)
        return np.any((ijk == 0) | (ijk == counts), axis=1)

    def min_dihedral_angle(self) -> float:
        """Smallest interior dihedral angle over all tets, in radians."""
        x = self.nodes[self.tets]
        normals = []
        for f in range(4):
            a, b, c = (x[:, i] for i in LOCAL_FACES[f])
            n = np.cross(b - a, c - a)
            # orient outward: away from the opposite vertex
            flip = np.einsum("ij,ij->i", n, x[:, f] - a) > 0
            n[flip] *= -1
            normals.append(n / np.linalg.norm(n, axis=1, keepdims=True))
        best = np.pi
        for f, g in itertools.combinations(range(4), 2):
            cos = np.clip(np.einsum("ij,ij->i", normals[f], normals[g]), -1.0, 1.0)
            best = min(best, float(np.min(np.pi - np.arccos(cos))))
        return best


def build_box_mesh(box: Box = ((0.0, 0.0, 0.0), (10.0, 10.0, 10.0)), h: float = 0.5) -> TetraMesh:
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if h <= 0:
        raise NonDivisibleExtent(f"mesh size must be positive, got {h}")
    extent = hi - lo
    counts = np.rint(extent / h).astype(np.int64)
    if np.any(counts < 1) or np.any(np.abs(counts * h - extent) > 1e-9 * np.maximum(extent, 1.0)):
        raise NonDivisibleExtent(f"box extents {extent.tolist()} are not integer multiples of h={h}")
    nx, ny, nz = (int(c) for c in counts)
    sx, sy = nx + 1, ny + 1

    k, j, i = np.meshgrid(np.arange(nz + 1), np.arange(ny + 1), np.arange(nx + 1), indexing="ij")
    nodes = lo + h * np.column_stack([i.ravel(), j.ravel(), k.ravel()]).astype(float)

    ck, cj, ci = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    base = np.column_stack([ci.ravel(), cj.ravel(), ck.ravel()])  # (cubes, 3)
    corners = base[:, None, None, :] + KUHN_TEMPLATE[None]  # (cubes, 6, 4, 3)
    tets = corners[..., 0] + sx * (corners[..., 1] + sy * corners[..., 2])
    mesh = TetraMesh(nodes, tets.reshape(-1, 4).astype(np.int64), float(h), lo, (nx, ny, nz))
    return mesh


@dataclass
class MaterialField:
    kinds: np.ndarray  # (m,) int8 TissueKind values
    eps: np.ndarray
    sigma: np.ndarray

    @classmethod
    def uniform(cls, n_tets: int, eps: float = 1.0, sigma: float = 0.0) -> "MaterialField":
        return cls(
            np.full(n_tets, TissueKind.VACUUM, dtype=np.int8),
            np.full(n_tets, float(eps)),
            np.full(n_tets, float(sigma)),
        )


def assign_materials(mesh: TetraMesh, phantom: SkinPhantom) -> MaterialField:
    """Sample the phantom at each tet centroid."""
    kinds = phantom.classify(mesh.centroids())
    eps_table, sigma_table = phantom.coefficient_tables()
    return MaterialField(kinds, eps_table[kinds], sigma_table[kinds])


def mesh_stats(mesh: TetraMesh, field: MaterialField | None = None) -> dict:
    vols = mesh.signed_volumes()
    stats = {
        "node_count": mesh.n_nodes,
        "tet_count": mesh.n_tets,
        "h": mesh.h,
        "total_volume": float(vols.sum()),
        "min_dihedral_angle_deg": float(np.degrees(mesh.min_dihedral_angle())),
    }
    if field is not None:
        per = np.bincount(field.kinds, weights=vols, minlength=len(TissueKind))
        stats["tissue_volume"] = {TissueKind(k).name: float(v) for k, v in enumerate(per) if v > 0}
    return stats


def check_positive(mesh: TetraMesh) -> np.ndarray:
    vols = mesh.signed_volumes()
    bad = np.nonzero(vols <= 0)[0]
    if bad.size:
        raise DegenerateElement(f"{bad.size} tets with non-positive volume, first is tet {bad[0]}")
    return vols


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def export_vtk(mesh: TetraMesh, field: MaterialField | None, path, E: np.ndarray | None = None,
               title: str = "melanoma_fem tetrahedral mesh") -> Path:
    """Write a legacy ASCII unstructured-grid file.

    ``E`` is an optional nodal vector field of shape (n_nodes, 3); when it is
    omitted no POINT_DATA section is written.
    """
    path = Path(path)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_nodes} float")
    lines.extend(" ".join(repr(float(c)) for c in p) for p in mesh.nodes)
    lines.append(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}")
    lines.extend("4 " + " ".join(str(int(v)) for v in t) for t in mesh.tets)
    lines.append(f"CELL_TYPES {mesh.n_tets}")
    lines.extend([str(VTK_TETRA)] * mesh.n_tets)
    if field is not None:
        lines.append(f"CELL_DATA {mesh.n_tets}")
        lines += ["SCALARS tissue int 1", "LOOKUP_TABLE default"]
        lines.extend(str(int(k)) for k in field.kinds)
        for name, values in (("eps", field.eps), ("sigma", field.sigma)):
            lines += [f"SCALARS {name} float 1", "LOOKUP_TABLE default"]
            lines.extend(repr(float(v)) for v in values)
    if E is not None:
        E = np.asarray(E, dtype=float)
        if E.shape != (mesh.n_nodes, 3):
            raise ValueError(f"nodal field must have shape {(mesh.n_nodes, 3)}, got {E.shape}")
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        lines.append("VECTORS E float")
        lines.extend(" ".join(repr(float(c)) for c in v) for v in E)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc.strerror or exc}") from exc
    return path


def read_vtk(path) -> dict:
    """Parse a file written by :func:`export_vtk`.

    Returns a dict with ``points``, ``cells``, ``cell_types``, ``cell_data``
    (name -> array) and ``point_data`` (name -> array).
    """
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    out = {"cell_data": {}, "point_data": {}}
    it = iter(tokens[4:])
    section = None
    for line in it:
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "POINTS":
            n = int(parts[1])
            out["points"] = np.array([next(it).split() for _ in range(n)], dtype=float)
        elif key == "CELLS":
            n = int(parts[1])
            out["cells"] = np.array([next(it).split()[1:] for _ in range(n)], dtype=np.int64)
        elif key == "CELL_TYPES":
            n = int(parts[1])
            out["cell_types"] = np.array([next(it) for _ in range(n)], dtype=np.int64)
        elif key in ("CELL_DATA", "POINT_DATA"):
            section = (out["cell_data"] if key == "CELL_DATA" else out["point_data"], int(parts[1]))
        elif key == "SCALARS":
            target, n = section
            next(it)  # LOOKUP_TABLE
            dtype = np.int64 if parts[2] == "int" else float
            target[parts[1]] = np.array([next(it) for _ in range(n)], dtype=dtype)
        elif key == "VECTORS":
            target, n = section
            target[parts[1]] = np.array([next(it).split() for _ in range(n)], dtype=float)
    return out


def write_mesh_binary(mesh: TetraMesh, path) -> Path:
    """``MMFE1`` | u64 nodes | u64 tets | f64 h | f64 lo[3] | u64 counts[3] | f64 nodes | i64 tets."""
    path = Path(path)
    header = BINARY_MAGIC + struct.pack("<QQd3d3Q", mesh.n_nodes, mesh.n_tets, mesh.h, *mesh.lo, *mesh.counts)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(mesh.nodes, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(mesh.tets, dtype="<i8").tobytes())
    return path


def read_mesh_binary(path) -> TetraMesh:
    data = Path(path).read_bytes()
    if data[:5] != BINARY_MAGIC:
        raise ValueError(f"{path}: not an MMFE1 mesh file")
    fmt = "<QQd3d3Q"
    off = 5 + struct.calcsize(fmt)
    n, m, h, x0, y0, z0, cx, cy, cz = struct.unpack(fmt, data[5:off])
    nodes = np.frombuffer(data, dtype="<f8", count=3 * n, offset=off).reshape(n, 3).astype(float)
    off += 24 * n
    tets = np.frombuffer(data, dtype="<i8", count=4 * m, offset=off).reshape(m, 4).astype(np.int64)
    return TetraMesh(nodes, tets, h, np.array([x0, y0, z0]), (cx, cy, cz))
