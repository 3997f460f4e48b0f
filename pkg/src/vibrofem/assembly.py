"""Element matrices and assembly of the global coupled block system
A(omega) = K(omega) - omega^2 M(omega).

Block layout (domains in config order): each domain owns a contiguous DoF
range.  Fluid-structure coupling enters one-sidedly: -C on the structure
rows of K (fluid columns) and rho_f * C^T on the fluid rows of M
(structure columns), which makes the assembled operator non-symmetric.
The interface normal points from the structure into the fluid.

Frequency dependence factors out of the element integrals (damping scale,
porous density/modulus), so each mesh is integrated once and per-frequency
blocks are sparse-scalar combinations of cached primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import materials as mats
from . import shape
from .config import LoadSpec, ModelConfig
from .meshing import Mesh

QUAD_ORDER = 3  # 3x3 Gauss, exact for the quadratic bilinear forms used here


def plane_stress_D(E: float, nu: float) -> np.ndarray:
    c = E / (1.0 - nu * nu)
    return c * np.array([[1.0, nu, 0.0],
                         [nu, 1.0, 0.0],
                         [0.0, 0.0, 0.5 * (1.0 - nu)]])


def elastic_element_parts(material: mats.ElasticMaterial, coords: np.ndarray):
    """Material stiffness, geometric (pre-tension) stiffness and consistent
    mass of one 9-node quad; DoF order (ux0, uy0, ux1, uy1, ...)."""
    D = plane_stress_D(material.E, material.nu)
    t = material.thickness
    Tx, Ty = material.prestress
    pts, wts = shape.gauss2d(QUAD_ORDER)
    Kmat = np.zeros((18, 18))
    Kgeo = np.zeros((18, 18))
    Me = np.zeros((18, 18))
    for (xi, eta), w in zip(pts, wts):
        J = shape.jacobian(coords, xi, eta)
        detJ = np.linalg.det(J)
        if detJ <= 0:
            raise ValueError("non-positive Jacobian in elastic element")
        dN = shape.dshape(xi, eta) @ np.linalg.inv(J)
        N = shape.shape(xi, eta)
        B = np.zeros((3, 18))
        B[0, 0::2] = dN[:, 0]
        B[1, 1::2] = dN[:, 1]
        B[2, 0::2] = dN[:, 1]
        B[2, 1::2] = dN[:, 0]
        Kmat += w * detJ * t * (B.T @ D @ B)
        g = dN @ np.diag([Tx, Ty]) @ dN.T  # pre-tension acts per component
        Kgeo[0::2, 0::2] += w * detJ * g
        Kgeo[1::2, 1::2] += w * detJ * g
        nn = np.outer(N, N)
        Me[0::2, 0::2] += w * detJ * material.rho * t * nn
        Me[1::2, 1::2] += w * detJ * material.rho * t * nn
    return Kmat, Kgeo, Me


def elastic_element(material: mats.ElasticMaterial, damping_scale: complex,
                    coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Damped plane-stress stiffness (incl. pre-tension) and mass."""
    Kmat, Kgeo, Me = elastic_element_parts(material, coords)
    return damping_scale * Kmat + Kgeo, Me


def helmholtz_element_parts(coords: np.ndarray):
    """Unscaled Laplacian and mass integrals of one 9-node quad."""
    pts, wts = shape.gauss2d(QUAD_ORDER)
    Kgrad = np.zeros((9, 9))
    Mnn = np.zeros((9, 9))
    for (xi, eta), w in zip(pts, wts):
        J = shape.jacobian(coords, xi, eta)
        detJ = np.linalg.det(J)
        if detJ <= 0:
            raise ValueError("non-positive Jacobian in Helmholtz element")
        dN = shape.dshape(xi, eta) @ np.linalg.inv(J)
        N = shape.shape(xi, eta)
        Kgrad += w * detJ * (dN @ dN.T)
        Mnn += w * detJ * np.outer(N, N)
    return Kgrad, Mnn


def helmholtz_element(rho_eff: complex, c_eff: complex, damping_scale: complex,
                      coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pressure-field stiffness and mass:
    Ke = scale/rho * grad(N) grad(N), Me = 1/(rho c^2) * N N."""
    if rho_eff == 0:
        raise ValueError("zero effective density")
    Kgrad, Mnn = helmholtz_element_parts(coords)
    return damping_scale / rho_eff * Kgrad, Mnn / (rho_eff * c_eff * c_eff)


OUTWARD_NORMAL = {"S": (0.0, -1.0), "N": (0.0, 1.0),
                  "W": (-1.0, 0.0), "E": (1.0, 0.0)}


def plane_wave_load(load: LoadSpec, f: float, mesh: Mesh) -> np.ndarray:
    """Consistent nodal loads of a travelling pressure wave on one edge.

    The pressure amplitude p_hat * e^{-i (omega/c) s} acts along the inward
    normal of the loaded edge; s is the arclength measured from the edge
    start (or end, for direction -1).
    """
    traces = mesh.boundary_edges[load.boundary]
    n_out = OUTWARD_NORMAL[load.boundary]
    comp = 0 if load.boundary in ("W", "E") else 1
    inward = -n_out[comp]
    k = 2.0 * math.pi * f / load.wave_speed

    axis = 1 if load.boundary in ("W", "E") else 0
    edge_coords = [mesh.nodes[t.nodes[0], axis] for t in traces] + \
                  [mesh.nodes[traces[-1].nodes[2], axis]]
    s0, s1 = min(edge_coords), max(edge_coords)

    fvec = np.zeros(2 * mesh.n_nodes, dtype=complex)
    xg, wg = shape.gauss1d(QUAD_ORDER)
    for tr in traces:
        a = mesh.nodes[tr.nodes[0], axis]
        b = mesh.nodes[tr.nodes[2], axis]
        Jed = 0.5 * (b - a)
        for xi, w in zip(xg, wg):
            pos = 0.5 * (a + b) + xi * Jed
            s = pos - s0 if load.direction == 1 else s1 - pos
            p = load.amplitude * np.exp(-1j * k * s)
            N = shape.shape1d(xi)
            for loc, node in enumerate(tr.nodes):
                fvec[2 * node + comp] += w * Jed * N[loc] * p * inward
    return fvec


def _assemble_primitives(mesh: Mesh, kind: str, material):
    """Frequency-independent global sparse primitives of one domain.

    Elements are visited in index order so the triplet stream, and with it
    the summed sparse matrices, are bit-reproducible.
    """
    esize = 18 if kind == "elastic" else 9
    ndof = (2 if kind == "elastic" else 1) * mesh.n_nodes
    names = ("Kmat", "Kgeo", "M") if kind == "elastic" else ("Kgrad", "Mnn")
    vals = {n: np.empty(mesh.n_elements * esize * esize) for n in names}
    rows = np.empty(mesh.n_elements * esize * esize, dtype=np.int64)
    cols = np.empty_like(rows)
    for e in range(mesh.n_elements):
        conn = mesh.elements[e]
        coords = mesh.nodes[conn]
        if kind == "elastic":
            parts = elastic_element_parts(material, coords)
            dofs = np.empty(18, dtype=np.int64)
            dofs[0::2] = 2 * conn
            dofs[1::2] = 2 * conn + 1
        else:
            parts = helmholtz_element_parts(coords)
            dofs = conn
        sl = slice(e * esize * esize, (e + 1) * esize * esize)
        rows[sl] = np.repeat(dofs, esize)
        cols[sl] = np.tile(dofs, esize)
        for name, mat in zip(names, parts):
            vals[name][sl] = mat.ravel()
    out = {}
    for name in names:
        A = sp.coo_matrix((vals[name], (rows, cols)), shape=(ndof, ndof)).tocsr()
        A.sum_duplicates()
        out[name] = A
    return out


@dataclass(frozen=True)
class BlockSystem:
    """Per-domain sparse blocks and coupling data at one frequency."""

    domain_order: tuple[str, ...]
    block_map: dict                 # domain id -> (offset, size)
    K_blocks: dict                  # domain id -> sparse, complex
    M_blocks: dict
    couplings: tuple                # (structure id, fluid id, C, rho_f)
    f_ext: np.ndarray

    @property
    def n_dofs(self) -> int:
        return sum(size for _, size in self.block_map.values())

    def _block_grid(self, diag: dict, coupling_side: str):
        order = self.domain_order
        pos = {did: i for i, did in enumerate(order)}
        grid = [[None] * len(order) for _ in order]
        for did in order:
            grid[pos[did]][pos[did]] = diag[did]
        for sid, fid, C, rho in self.couplings:
            if coupling_side == "K":
                blk = -C
                r, c = pos[sid], pos[fid]
            else:
                blk = rho * C.T
                r, c = pos[fid], pos[sid]
            grid[r][c] = blk if grid[r][c] is None else grid[r][c] + blk
        return grid

    def assemble_K(self) -> sp.csr_matrix:
        return sp.bmat(self._block_grid(self.K_blocks, "K"), format="csr",
                       dtype=complex)

    def assemble_M(self) -> sp.csr_matrix:
        return sp.bmat(self._block_grid(self.M_blocks, "M"), format="csr",
                       dtype=complex)

    def operator(self, omega: float) -> sp.csc_matrix:
        return (self.assemble_K() - omega * omega * self.assemble_M()).tocsc()


class ModelOperator:
    """Caches mesh integrals and produces A(omega), K, M and the load for
    arbitrary frequencies cheaply."""

    def __init__(self, config: ModelConfig, meshes: dict, couplings):
        self.config = config
        self.meshes = meshes
        self.kinds = {d.id: d.kind for d in config.domains}
        self.block_map = {}
        off = 0
        for d in config.domains:
            size = (2 if d.kind == "elastic" else 1) * meshes[d.id].n_nodes
            self.block_map[d.id] = (off, size)
            off += size
        self.n_dofs = off
        self.primitives = {
            d.id: _assemble_primitives(meshes[d.id], d.kind,
                                       config.materials[d.material_id])
            for d in config.domains}
        self.couplings = [(sid, fid, sp.csr_matrix(C)) for sid, fid, C in couplings]

    def _domain_KM(self, d, f: float):
        material = self.config.materials[d.material_id]
        damping = self.config.damping_tables.get(d.damping_table_id)
        scale = mats.complex_stiffness_scale(damping, f) if damping else 1.0 + 0j
        prim = self.primitives[d.id]
        if d.kind == "elastic":
            K = scale * prim["Kmat"] + prim["Kgeo"].astype(complex)
            M = prim["M"].astype(complex)
        else:
            if d.kind == "equivalent_fluid":
                rho_eff, c_eff = mats.jca_effective(material, f)
            else:
                rho_eff, c_eff = complex(material.rho), complex(material.c)
            K = (scale / rho_eff) * prim["Kgrad"]
            M = prim["Mnn"] / (rho_eff * c_eff * c_eff)
        return K, M

    def system(self, f: float) -> BlockSystem:
        K_blocks, M_blocks = {}, {}
        for d in self.config.domains:
            K_blocks[d.id], M_blocks[d.id] = self._domain_KM(d, f)
        tagged = []
        for sid, fid, C in self.couplings:
            rho = fluid_density(self.kinds[fid], self.config.material_of(fid), f)
            tagged.append((sid, fid, C, rho))
        return BlockSystem(domain_order=tuple(d.id for d in self.config.domains),
                           block_map=self.block_map, K_blocks=K_blocks,
                           M_blocks=M_blocks, couplings=tuple(tagged),
                           f_ext=self.load(f))

    def load(self, f: float) -> np.ndarray:
        f_ext = np.zeros(self.n_dofs, dtype=complex)
        target = self.config.load.target_domain
        lo, _ = self.block_map[target]
        fvec = plane_wave_load(self.config.load, f, self.meshes[target])
        f_ext[lo:lo + fvec.shape[0]] = fvec
        return f_ext

    def K(self, f: float) -> sp.csr_matrix:
        return self.system(f).assemble_K()

    def M(self, f: float) -> sp.csr_matrix:
        return self.system(f).assemble_M()

    def operator(self, f: float) -> sp.csc_matrix:
        return self.system(f).operator(2.0 * math.pi * f)


def fluid_density(kind: str, material, f: float) -> complex:
    if kind == "acoustic":
        return complex(material.rho)
    rho_eff, _ = mats.jca_effective(material, f)
    return rho_eff


def assemble_global(config: ModelConfig, meshes: dict, couplings,
                    f: float) -> BlockSystem:
    """One-shot assembly of the coupled block system at frequency f.

    ``couplings`` holds (structure id, fluid id, C) triples from the mortar
    module; C rows are structure DoFs, columns fluid DoFs.
    """
    return ModelOperator(config, meshes, couplings).system(f)


def dump_matrix_market(path, A, comment: str = ""):
    """Matrix Market complex coordinate dump for external verification."""
    from scipy.io import mmwrite
    mmwrite(str(path), sp.coo_matrix(A), comment=comment)
