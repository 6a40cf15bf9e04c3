"""Finite differences for the homogeneous wave equation outside the FEM box.

The lattice covers ``[lo, hi]^3`` with spacing ``h``; arrays are indexed
``[component, i, j, k]`` with ``i`` along x1.  Node roles:

* outer boundary: absorbing update (``d_n E = -d_t E``); the top face
  x3 = hi also carries the plane-wave source;
* active: interior nodes outside the open FEM box, updated with the 7-point
  leapfrog stencil.  This includes the nodes on the FEM box surface;
* overlap: the first lattice layer inside the FEM box, filled from the FEM
  solution by the exchange and read by the stencil of the box-surface nodes;
* inactive: everything deeper inside the FEM box.

A grid built without a FEM box is a pure whole-domain FDM solver.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import CflViolation
from .fem import BLOWUP_BOUND

SOURCE_MODES = ("incident", "dirichlet")


# ---------------------------------------------------------------------------
# lumped lattice weights (dimension generic, in units of h^d)
# ---------------------------------------------------------------------------


def _axis_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def _outer(vectors: list[np.ndarray]) -> np.ndarray:
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


@lru_cache(maxsize=None)
def lattice_weights(shape: tuple[int, ...]):
    """Node volumes, node outer-face areas and per-axis edge weights.

    Volumes are in units of ``h^d``, areas of ``h^(d-1)`` and edge weights of
    ``h^d``; a node on ``k`` outer faces has volume ``2^-k``.
    """
    w = [_axis_weights(n) for n in shape]
    volume = _outer(w)
    area = np.zeros(shape)
    for axis, n in enumerate(shape):
        ends = np.zeros(n)
        ends[0] = ends[-1] = 1.0
        area += _outer([ends if a == axis else w[a] for a in range(len(shape))])
    edges = []
    for axis, n in enumerate(shape):
        edges.append(_outer([np.ones(n - 1) if a == axis else w[a] for a in range(len(shape))]))
    return volume, area, tuple(edges)


def weighted_laplacian(E: np.ndarray, h: float) -> np.ndarray:
    """Lumped finite-volume Laplacian per unit ``h^d``.

    ``E`` has shape ``(components, *lattice)``.  Edges lying on outer faces
    carry half weight per boundary direction (natural boundary); on interior
    nodes this is the standard ``2d+1``-point stencil divided by ``h^2``.
    """
    _, _, edges = lattice_weights(E.shape[1:])
    out = np.zeros_like(E)
    for axis, c in enumerate(edges):
        d = np.diff(E, axis=axis + 1) * c / h**2
        lo = [slice(None)] * E.ndim
        hi = [slice(None)] * E.ndim
        lo[axis + 1] = slice(0, -1)
        hi[axis + 1] = slice(1, None)
        out[tuple(lo)] += d
        out[tuple(hi)] -= d
    return out


def absorbing_values(E_prev: np.ndarray, E_curr: np.ndarray, h: float, tau: float,
                     forcing: np.ndarray | None = None) -> np.ndarray:
    """Next-step values on every node from the absorbing boundary scheme.

    Each node solves::

        w (E^{n+1} - 2E^n + E^{n-1}) / tau^2
            = L_w E^n - (a / h) (E^{n+1} - E^{n-1}) / (2 tau) + (a / h) f

    with lumped volume ``w``, outer-face area ``a`` and the weighted Laplacian
    ``L_w``.  Only boundary entries (``a > 0``) are meaningful to callers; on
    interior nodes the result is the plain leapfrog update.  ``forcing`` is
    ``2 d_t g`` of an incoming wave ``g``, already restricted to the nodes
    where it enters (zero elsewhere).
    """
    volume, area, _ = lattice_weights(E_curr.shape[1:])
    damp = area / h / (2.0 * tau)
    rhs = volume / tau**2 * (2.0 * E_curr - E_prev) + damp * E_prev + weighted_laplacian(E_curr, h)
    if forcing is not None:
        rhs = rhs + (area / h) * forcing
    return rhs / (volume / tau**2 + damp)


def mur_coefficient(tau: float, h: float) -> float:
    """Coefficient ``c`` of the interpolated first-order one-way update.

    ``E_b^{n+1} = E_i^n + c (E_i^{n+1} - E_b^n)`` with ``c = (lam-1)/(lam+1)``.
    """
    lam = tau / h
    return (lam - 1.0) / (lam + 1.0)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


class FdmGrid:
    def __init__(self, lo: float = -2.0, hi: float = 12.0, h: float = 0.5,
                 fem_box: tuple[float, float] | None = (0.0, 10.0)):
        n_cells = round((hi - lo) / h)
        if n_cells < 2 or abs(n_cells * h - (hi - lo)) > 1e-9 * (hi - lo):
            raise ValueError(f"extent {hi - lo} is not a multiple of h={h}")
        self.lo, self.hi, self.h = float(lo), float(hi), float(h)
        self.n = n_cells + 1
        self.fem_box = fem_box
        shape = (3, self.n, self.n, self.n)
        self.E_prev = np.zeros(shape)
        self.E_curr = np.zeros(shape)
        self.E_next = np.zeros(shape)
        self.t = 0.0
        self.step_count = 0
        self._build_masks()

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def node_count(self) -> int:
        return self.n**3

    def coordinates(self, index) -> np.ndarray:
        return self.lo + self.h * np.asarray(index, dtype=float)

    def index_of(self, x) -> np.ndarray:
        """Fractional lattice index of coordinate(s) ``x``."""
        return (np.asarray(x, dtype=float) - self.lo) / self.h

    def _build_masks(self):
        n = self.n
        idx = np.arange(n)
        I, J, K = np.meshgrid(idx, idx, idx, indexing="ij")
        self.outer_boundary = (I == 0) | (I == n - 1) | (J == 0) | (J == n - 1) | (K == 0) | (K == n - 1)
        self.source_face = K == n - 1
        if self.fem_box is None:
            self.box_index = None
            self.overlap = np.zeros(self.shape, dtype=bool)
            self.inactive = np.zeros(self.shape, dtype=bool)
        else:
            a, b = (float(self.index_of(v)) for v in self.fem_box)
            ia, ib = round(a), round(b)
            if abs(a - ia) > 1e-9 or abs(b - ib) > 1e-9 or ia < 1 or ib > n - 2 or ib - ia < 2:
                raise ValueError(f"FEM box {self.fem_box} is not aligned with the lattice")
            self.box_index = (ia, ib)
            inside_open = np.ones(self.shape, dtype=bool)
            deep = np.ones(self.shape, dtype=bool)
            for A in (I, J, K):
                inside_open &= (A > ia) & (A < ib)
                deep &= (A > ia + 1) & (A < ib - 1)
            self.overlap = inside_open & ~deep
            self.inactive = deep
        self.active = ~self.outer_boundary & ~self.overlap & ~self.inactive

    def reset(self):
        for arr in (self.E_prev, self.E_curr, self.E_next):
            arr[...] = 0.0
        self.t = 0.0
        self.step_count = 0

    def commit(self, tau: float):
        """Rotate buffers so that ``E_next`` becomes the current field."""
        self.E_prev, self.E_curr, self.E_next = self.E_curr, self.E_next, self.E_prev
        self.step_count += 1
        self.t = self.step_count * tau

    def energy(self, E_curr: np.ndarray | None = None, E_next: np.ndarray | None = None,
               tau: float = 1.0) -> float:
        """Leapfrog energy of a lattice field with unit coefficients.

        ``h^3 [sum_p w_p |(E^{n+1} - E^n) / tau|^2 + sum_e c_e dE^n dE^{n+1} / h^2]``
        with the lumped weights of the absorbing scheme, so that it is exactly
        non-increasing once sources are off.  Defaults to ``E_prev``/``E_curr``.
        """
        if E_curr is None:
            E_curr, E_next = self.E_prev, self.E_curr
        volume, _, edges = lattice_weights(E_curr.shape[1:])
        v = (E_next - E_curr) / tau
        total = np.sum(volume * v * v)
        for axis, c in enumerate(edges):
            total += np.sum(c * np.diff(E_curr, axis=axis + 1) * np.diff(E_next, axis=axis + 1)) / self.h**2
        return float(total * self.h**3)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------


def laplacian_update(grid: FdmGrid, tau: float) -> np.ndarray:
    """``2 E^n - E^{n-1} + tau^2 Lap_h E^n`` on all non-boundary nodes."""
    E, P = grid.E_curr, grid.E_prev
    c = E[:, 1:-1, 1:-1, 1:-1]
    lap = (E[:, 2:, 1:-1, 1:-1] + E[:, :-2, 1:-1, 1:-1]
           + E[:, 1:-1, 2:, 1:-1] + E[:, 1:-1, :-2, 1:-1]
           + E[:, 1:-1, 1:-1, 2:] + E[:, 1:-1, 1:-1, :-2] - 6.0 * c)
    return 2.0 * c - P[:, 1:-1, 1:-1, 1:-1] + (tau / grid.h) ** 2 * lap


def check_cfl(tau: float, h: float):
    limit = h / math.sqrt(3.0)
    if tau > limit * (1 + 1e-12):
        raise CflViolation(f"tau={tau} exceeds the 3D stability limit h/sqrt(3)={limit:.6g}")


def fdm_step(grid: FdmGrid, tau: float, blowup: float = BLOWUP_BOUND) -> FdmGrid:
    """Interior leapfrog update into ``grid.E_next`` at active nodes.

    Overlap and inactive nodes carry ``E^n`` forward until the exchange
    overwrites them; outer-boundary nodes are left to :func:`apply_absorbing`.
    """
    check_cfl(tau, grid.h)
    inner = grid.active[1:-1, 1:-1, 1:-1]
    target = grid.E_next[:, 1:-1, 1:-1, 1:-1]
    target[...] = np.where(inner, laplacian_update(grid, tau), grid.E_curr[:, 1:-1, 1:-1, 1:-1])
    peak = float(np.max(np.abs(target)))
    if not np.isfinite(peak) or peak > blowup:
        raise CflViolation(f"FDM field amplitude {peak:.3e} exceeds {blowup:.1e} at step {grid.step_count + 1}")
    return grid


def apply_absorbing(grid: FdmGrid, tau: float, skip_source_face: bool = False) -> FdmGrid:
    """Write absorbing-boundary values for step n+1 into ``grid.E_next``.

    Uses :func:`absorbing_values`; the update of each boundary node depends
    only on time levels n and n-1, so faces, edges and corners need no
    processing order.  For a normally incident 1D wave with ``tau = h`` it
    reduces to pure outflow ``E_b^{n+1} = E_i^n``.
    """
    new = absorbing_values(grid.E_prev, grid.E_curr, grid.h, tau)
    mask = grid.outer_boundary & ~grid.source_face if skip_source_face else grid.outer_boundary
    grid.E_next[:, mask] = new[:, mask]
    return grid


def pulse(t: float, omega: float, amplitude: float = 1.0) -> float:
    """One period of ``amplitude * sin(omega t)``, zero outside ``[0, 2 pi / omega]``."""
    if source_active(t, omega):
        return amplitude * math.sin(omega * t)
    return 0.0


def source_active(t: float, omega: float) -> bool:
    return 0.0 <= t <= 2.0 * math.pi / omega


def apply_source(grid: FdmGrid, t: float, omega: float, amplitude: float = 1.0,
                 tau: float | None = None, mode: str = "incident") -> np.ndarray:
    """Plane-wave pulse through the top face (x3 = hi), polarised along x1.

    ``t`` is the time level being written (n+1).  In ``"dirichlet"`` mode the
    face is overwritten with ``E1 = pulse(t)``, ``E2 = E3 = 0`` while the pulse
    is on.  In ``"incident"`` mode the face keeps its absorbing update and the
    pulse enters as incoming data ``d_n E + d_t E = 2 d_t pulse``; call after
    :func:`apply_absorbing`.  Returns a view of the source-face values of
    ``E_next``, shape ``(3, n, n)``.
    """
    if mode == "dirichlet":
        if source_active(t, omega):
            grid.E_next[0, :, :, -1] = amplitude * math.sin(omega * t)
            grid.E_next[1:, :, :, -1] = 0.0
    elif mode == "incident":
        if tau is None:
            raise ValueError("incident source needs the time step")
        t_n = t - tau
        dg = (pulse(t_n + tau, omega, amplitude) - pulse(t_n - tau, omega, amplitude)) / (2.0 * tau)
        if dg != 0.0:
            volume, area, _ = lattice_weights(grid.shape)
            damp = area / grid.h / (2.0 * tau)
            gain = (area / grid.h) / (volume / tau**2 + damp)
            grid.E_next[0, :, :, -1] += gain[:, :, -1] * 2.0 * dg
    else:
        raise ValueError(f"unknown source mode {mode!r}; expected one of {SOURCE_MODES}")
    return grid.E_next[:, :, :, -1]


def advance(grid: FdmGrid, tau: float, omega: float, amplitude: float = 1.0,
            mode: str = "incident") -> FdmGrid:
    """One full FDM step: interior, boundaries, source, buffer rotation."""
    t_next = (grid.step_count + 1) * tau
    fdm_step(grid, tau)
    dirichlet_on = mode == "dirichlet" and source_active(t_next, omega)
    apply_absorbing(grid, tau, skip_source_face=dirichlet_on)
    apply_source(grid, t_next, omega, amplitude, tau=tau, mode=mode)
    grid.commit(tau)
    return grid
