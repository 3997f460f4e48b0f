"""Fluid-structure coupling matrices between independently meshed domains.

Interfaces are straight axis-aligned segments, so the 1D intersection of
edge traces is exact interval arithmetic.  Each intersection segment (an
interface element) carries mapped Gauss points: global coordinates, the
Newton-mapped reference coordinates in both parent elements, and the
segment Jacobian.  Conforming meshes fall out as the degenerate case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import shape
from .config import InterfaceSpec, shared_segment
from .meshing import EdgeTrace, Mesh

GEOM_TOL = 1e-12
DEFAULT_GAUSS = 3  # exact for the degree-4 product of quadratic traces

inverse_map = shape.inverse_map


@dataclass(frozen=True)
class GaussPoint:
    global_xy: tuple[float, float]
    weight: float          # 1D Gauss weight W_l
    xi_s: tuple[float, float]  # reference coords in the structure element
    xi_f: tuple[float, float]  # reference coords in the fluid element
    xi_e: float            # coordinate on the interface element [-1, 1]
    jac: float             # segment Jacobian, length/2


@dataclass(frozen=True)
class InterfaceElement:
    segment: tuple[tuple[float, float], tuple[float, float]]
    parent_s: EdgeTrace
    parent_f: EdgeTrace
    normal: tuple[float, float]  # unit normal, structure into fluid
    gauss: tuple[GaussPoint, ...]

    @property
    def length(self) -> float:
        (x0, y0), (x1, y1) = self.segment
        return float(np.hypot(x1 - x0, y1 - y0))


@dataclass(frozen=True)
class CouplingMatrix:
    C: sp.csr_matrix    # rows: structure DoFs (2/node), cols: fluid DoFs
    rho_f: complex | None = None


def _mesh_rect(mesh: Mesh):
    lo = mesh.nodes.min(axis=0)
    hi = mesh.nodes.max(axis=0)
    return lo[0], lo[1], hi[0], hi[1]


def _facing_tags(rect_s, rect_f, segment):
    """Boundary tags of both meshes on the shared segment plus the normal
    pointing from the structure into the fluid."""
    (x0, y0), (x1, y1) = segment
    if abs(x1 - x0) <= GEOM_TOL:  # vertical interface
        if abs(rect_s[2] - x0) <= GEOM_TOL:
            return "E", "W", (1.0, 0.0), 1
        return "W", "E", (-1.0, 0.0), 1
    if abs(rect_s[3] - y0) <= GEOM_TOL:
        return "N", "S", (0.0, 1.0), 0
    return "S", "N", (0.0, -1.0), 0


def _trace_span(mesh: Mesh, trace: EdgeTrace, axis: int):
    a = mesh.nodes[trace.nodes[0], axis]
    b = mesh.nodes[trace.nodes[2], axis]
    return (a, b) if a <= b else (b, a)


def detect_interfaces(mesh_s: Mesh, mesh_f: Mesh, interface: InterfaceSpec,
                      n_gauss: int = DEFAULT_GAUSS) -> list[InterfaceElement]:
    """Pairwise 1D intersections of structure and fluid edge traces on the
    shared boundary segment, with mapped Gauss data."""
    rect_s, rect_f = _mesh_rect(mesh_s), _mesh_rect(mesh_f)
    segment = shared_segment(rect_s, rect_f, GEOM_TOL)
    if segment is None:
        raise ValueError(
            f"domains {interface.left}/{interface.right} share no boundary segment")
    tag_s, tag_f, normal, axis = _facing_tags(rect_s, rect_f, segment)
    (p0, q0), (p1, q1) = segment
    seg_lo = segment[0][axis]
    seg_hi = segment[1][axis]
    fixed = segment[0][1 - axis]

    xg, wg = shape.gauss1d(n_gauss)
    elements: list[InterfaceElement] = []
    covered = 0.0
    for tr_s in mesh_s.boundary_edges[tag_s]:
        sa, sb = _trace_span(mesh_s, tr_s, axis)
        for tr_f in mesh_f.boundary_edges[tag_f]:
            fa, fb = _trace_span(mesh_f, tr_f, axis)
            lo = max(sa, fa, seg_lo)
            hi = min(sb, fb, seg_hi)
            if hi - lo <= GEOM_TOL:
                continue
            jac = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            gps = []
            for xi, w in zip(xg, wg):
                coord = mid + xi * jac
                pt = (coord, fixed) if axis == 0 else (fixed, coord)
                xi_s = shape.inverse_map(mesh_s.nodes[mesh_s.elements[tr_s.element]], pt)
                xi_f = shape.inverse_map(mesh_f.nodes[mesh_f.elements[tr_f.element]], pt)
                gps.append(GaussPoint(global_xy=pt, weight=float(w),
                                      xi_s=(float(xi_s[0]), float(xi_s[1])),
                                      xi_f=(float(xi_f[0]), float(xi_f[1])),
                                      xi_e=float(xi), jac=jac))
            e0 = (lo, fixed) if axis == 0 else (fixed, lo)
            e1 = (hi, fixed) if axis == 0 else (fixed, hi)
            elements.append(InterfaceElement(segment=(e0, e1), parent_s=tr_s,
                                             parent_f=tr_f, normal=normal,
                                             gauss=tuple(gps)))
            covered += hi - lo
    if abs(covered - (seg_hi - seg_lo)) > 1e-10 * max(1.0, seg_hi - seg_lo):
        raise ValueError("interface elements do not cover the shared edge")
    return elements


def assemble_coupling(interfaces, mesh_s: Mesh, mesh_f: Mesh,
                      rho_f: complex | None = None) -> CouplingMatrix:
    """Quadrature of the mortar coupling integral over all interface
    elements: C[p, q] = sum_e sum_l W_l N^s_p N^f_q n J^e.

    Rows are structure displacement DoFs; only the normal direction of each
    structure node receives entries.  rho_f is recorded for the transposed
    mass-side block, it does not scale C itself.
    """
    rows, cols, vals = [], [], []
    for ie in interfaces:
        comp = 0 if abs(ie.normal[0]) > 0.5 else 1
        sgn = ie.normal[comp]
        conn_s = mesh_s.elements[ie.parent_s.element]
        conn_f = mesh_f.elements[ie.parent_f.element]
        for gp in ie.gauss:
            Ns = shape.shape(*gp.xi_s)
            Nf = shape.shape(*gp.xi_f)
            w = gp.weight * gp.jac * sgn
            for a in range(9):
                if abs(Ns[a]) < 1e-14:
                    continue
                for b in range(9):
                    if abs(Nf[b]) < 1e-14:
                        continue
                    rows.append(2 * conn_s[a] + comp)
                    cols.append(conn_f[b])
                    vals.append(w * Ns[a] * Nf[b])
    C = sp.coo_matrix((vals, (rows, cols)),
                      shape=(2 * mesh_s.n_nodes, mesh_f.n_nodes)).tocsr()
    C.sum_duplicates()
    return CouplingMatrix(C=C, rho_f=rho_f)


def interface_dump_rows(interfaces) -> list[dict]:
    """Per-Gauss-point audit records for the debug CSV dump."""
    out = []
    for k, ie in enumerate(interfaces):
        for gp in ie.gauss:
            out.append({
                "interface_element": k,
                "x0": ie.segment[0][0], "y0": ie.segment[0][1],
                "x1": ie.segment[1][0], "y1": ie.segment[1][1],
                "parent_s": ie.parent_s.element, "parent_f": ie.parent_f.element,
                "gx": gp.global_xy[0], "gy": gp.global_xy[1],
                "weight": gp.weight, "xi_e": gp.xi_e, "jac": gp.jac,
                "xi_s0": gp.xi_s[0], "xi_s1": gp.xi_s[1],
                "xi_f0": gp.xi_f[0], "xi_f1": gp.xi_f[1],
            })
    return out


def build_couplings(config, meshes: dict) -> list:
    """(structure id, fluid id, C) triples for every fsi interface."""
    kinds = {d.id: d.kind for d in config.domains}
    out = []
    for spec in config.interfaces:
        if spec.coupling != "fsi":
            continue
        if kinds[spec.left] == "elastic":
            sid, fid = spec.left, spec.right
        else:
            sid, fid = spec.right, spec.left
        interfaces = detect_interfaces(meshes[sid], meshes[fid], spec)
        cm = assemble_coupling(interfaces, meshes[sid], meshes[fid])
        out.append((sid, fid, cm.C))
    return out
