"""Piecewise-linear finite elements for the stabilized vector wave model.

Weak form per test function phi (one scalar P1 space per field component)::

    (eps E_tt, phi) + (sigma E_t, phi) + (grad E, grad phi)
        + ((eps - 1) div E, div phi) = 0

with eps and sigma constant on each tet.  Mass matrices are lumped by row
sum, the time scheme is explicit leapfrog with the damping term centred::

    (M_eps + tau/2 M_sigma) E^{n+1} = 2 M_eps E^n
        - (M_eps - tau/2 M_sigma) E^{n-1} - tau^2 (K + B) E^n

Boundary nodes of the mesh receive Dirichlet data from outside (the finite
difference layer), so no boundary integrals are assembled.

Vector unknowns are stored node-major: ``E`` has shape (n_nodes, 3) and the
coupled div-div operator acts on ``E.ravel()`` (index ``3 * node + comp``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CflViolation, DegenerateElement
from .mesh import MaterialField, TetraMesh

BLOWUP_BOUND = 1e6


def element_gradients(mesh: TetraMesh) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric gradients (m, 4, 3) and volumes (m,) of every tet."""
    x = mesh.nodes[mesh.tets]
    jac = np.swapaxes(x[:, 1:] - x[:, :1], 1, 2)  # columns are edge vectors
    det = np.linalg.det(jac)
    bad = np.nonzero(det <= 0)[0]
    if bad.size:
        raise DegenerateElement(f"tet {bad[0]} has non-positive volume {det[bad[0]] / 6.0}")
    inv = np.linalg.inv(jac)  # rows are grad(xi_1..3)
    grads = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)
    return grads, det / 6.0


@dataclass
class FemSystem:
    mass_eps: np.ndarray
    mass_sigma: np.ndarray
    stiffness: sp.csr_matrix  # scalar -Laplacian, (n, n)
    divdiv: sp.csr_matrix  # (3n, 3n)
    interface_nodes: np.ndarray
    _coupled: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.mass_eps)

    @property
    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.interface_nodes] = False
        return mask

    def operator(self) -> sp.csr_matrix:
        """``K (x) I3 + B`` acting on node-major flattened fields."""
        if self._coupled is None:
            k3 = sp.kron(self.stiffness, sp.identity(3, format="csr"), format="csr")
            self._coupled = (k3 + self.divdiv).tocsr() if self.divdiv.nnz else k3
        return self._coupled

    def apply(self, E: np.ndarray) -> np.ndarray:
        return (self.operator() @ E.reshape(-1)).reshape(-1, 3)


def assemble(mesh: TetraMesh, field: MaterialField) -> FemSystem:
    grads, vol = element_gradients(mesh)
    tets = mesh.tets
    n = mesh.n_nodes
    m = len(tets)

    lumped = np.repeat(vol / 4.0, 4)
    mass_eps = np.bincount(tets.ravel(), weights=np.repeat(field.eps, 4) * lumped, minlength=n)
    mass_sigma = np.bincount(tets.ravel(), weights=np.repeat(field.sigma, 4) * lumped, minlength=n)

    ke = np.einsum("e,eid,ejd->eij", vol, grads, grads)
    rows = np.repeat(tets, 4, axis=1).ravel()
    cols = np.tile(tets, (1, 4)).ravel()
    stiffness = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    weight = (field.eps - 1.0) * vol
    active = np.nonzero(weight != 0.0)[0]
    if active.size:
        g = grads[active].reshape(len(active), 12)
        be = weight[active, None, None] * g[:, :, None] * g[:, None, :]
        dof = (3 * tets[active][:, :, None] + np.arange(3)).reshape(len(active), 12)
        brow = np.repeat(dof, 12, axis=1).ravel()
        bcol = np.tile(dof, (1, 12)).ravel()
        divdiv = sp.coo_matrix((be.ravel(), (brow, bcol)), shape=(3 * n, 3 * n)).tocsr()
    else:
        divdiv = sp.csr_matrix((3 * n, 3 * n))

    interface = mesh.boundary_nodes()
    return FemSystem(mass_eps, mass_sigma, stiffness, divdiv, interface)


@dataclass
class FemState:
    E_prev: np.ndarray
    E_curr: np.ndarray
    tau: float
    t: float = 0.0
    step: int = 0

    @classmethod
    def zeros(cls, n_nodes: int, tau: float) -> "FemState":
        return cls(np.zeros((n_nodes, 3)), np.zeros((n_nodes, 3)), tau)

    @property
    def E(self) -> np.ndarray:
        return self.E_curr


class FemStepper:
    """Precomputed diagonal factors for a fixed time step."""

    def __init__(self, system: FemSystem, tau: float, blowup: float = BLOWUP_BOUND):
        self.system = system
        self.tau = tau
        self.blowup = blowup
        half = 0.5 * tau * system.mass_sigma
        denom = system.mass_eps + half
        self.c_curr = (2.0 * system.mass_eps / denom)[:, None]
        self.c_prev = ((system.mass_eps - half) / denom)[:, None]
        self.c_op = (tau**2 / denom)[:, None]
        self.interface = system.interface_nodes

    def step(self, state: FemState, interface_values=None) -> FemState:
        E_next = self.c_curr * state.E_curr - self.c_prev * state.E_prev - self.c_op * self.system.apply(state.E_curr)
        E_next[self.interface] = 0.0 if interface_values is None else interface_values
        peak = np.max(np.abs(E_next)) if E_next.size else 0.0
        if not np.isfinite(peak) or peak > self.blowup:
            raise CflViolation(
                f"FEM field amplitude {peak:.3e} exceeds {self.blowup:.1e} at step {state.step + 1}; "
                f"reduce tau (now {self.tau})"
            )
        state.E_prev, state.E_curr = state.E_curr, E_next
        state.step += 1
        state.t = state.step * state.tau
        return state


def fem_step(state: FemState, system: FemSystem, interface_values=None) -> FemState:
    """Advance ``state`` by one step of size ``state.tau``.

    ``interface_values`` has shape (len(system.interface_nodes), 3) or is
    broadcastable to it; ``None`` means homogeneous Dirichlet data.
    """
    return FemStepper(system, state.tau).step(state, interface_values)


def discrete_energy(system: FemSystem, E_curr: np.ndarray, E_next: np.ndarray, tau: float) -> float:
    """Leapfrog energy conserved by the undamped scheme."""
    v = (E_next - E_curr) / tau
    kinetic = 0.5 * np.sum(system.mass_eps[:, None] * v * v)
    potential = 0.5 * np.sum(system.apply(E_curr) * E_next)
    return float(kinetic + potential)
