"""Structured 9-node quadrilateral meshes and the frequency-dependent
mesh schedule built from the nodes-per-wavelength criterion."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import materials as mats
from .config import DomainSpec, FrequencyPlan, ModelConfig, frequency_grid

MIN_SUPPORTS = 10.0  # nodes per wavelength required by the sampling criterion


@dataclass(frozen=True)
class EdgeTrace:
    """One element edge on a tagged mesh boundary, nodes ordered along the
    edge coordinate (increasing x for S/N, increasing y for W/E)."""

    element: int
    local_edge: int  # 0=S, 1=E, 2=N, 3=W in the element's reference square
    nodes: tuple[int, int, int]  # end, mid, end


@dataclass(frozen=True)
class Mesh:
    domain_id: str
    nodes: np.ndarray      # (n, 2) coordinates in metres
    elements: np.ndarray   # (ne, 9) connectivity
    boundary_edges: dict   # tag N/S/E/W -> tuple of EdgeTrace
    element_size: tuple[float, float]

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]


def generate_mesh(domain: DomainSpec, element_size: tuple[float, float]) -> Mesh:
    """Structured grid of 9-node quads over an axis-aligned rectangle.

    Element counts are rounded to whole numbers and the spacing recomputed
    exactly, so mid-side and centre nodes land on arithmetic means.
    """
    x0, y0, x1, y1 = domain.rect
    wx, wy = x1 - x0, y1 - y0
    hx, hy = element_size
    if hx <= 0 or hy <= 0:
        raise ValueError("element size must be positive")
    nx = max(1, round(wx / hx))
    ny = max(1, round(wy / hy))
    hx, hy = wx / nx, wy / ny

    npx, npy = 2 * nx + 1, 2 * ny + 1
    xs = x0 + (x1 - x0) * np.arange(npx) / (npx - 1)
    ys = y0 + (y1 - y0) * np.arange(npy) / (npy - 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i: int, j: int) -> int:
        return j * npx + i

    elements = np.empty((nx * ny, 9), dtype=np.int64)
    for ey in range(ny):
        for ex in range(nx):
            i0, j0 = 2 * ex, 2 * ey
            elements[ey * nx + ex] = [
                nid(i0, j0), nid(i0 + 2, j0), nid(i0 + 2, j0 + 2), nid(i0, j0 + 2),
                nid(i0 + 1, j0), nid(i0 + 2, j0 + 1), nid(i0 + 1, j0 + 2),
                nid(i0, j0 + 1), nid(i0 + 1, j0 + 1),
            ]

    boundary: dict[str, tuple[EdgeTrace, ...]] = {}
    boundary["S"] = tuple(
        EdgeTrace(ex, 0, (nid(2 * ex, 0), nid(2 * ex + 1, 0), nid(2 * ex + 2, 0)))
        for ex in range(nx))
    boundary["N"] = tuple(
        EdgeTrace((ny - 1) * nx + ex, 2,
                  (nid(2 * ex, 2 * ny), nid(2 * ex + 1, 2 * ny), nid(2 * ex + 2, 2 * ny)))
        for ex in range(nx))
    boundary["W"] = tuple(
        EdgeTrace(ey * nx, 3, (nid(0, 2 * ey), nid(0, 2 * ey + 1), nid(0, 2 * ey + 2)))
        for ey in range(ny))
    boundary["E"] = tuple(
        EdgeTrace(ey * nx + nx - 1, 1,
                  (nid(2 * nx, 2 * ey), nid(2 * nx, 2 * ey + 1), nid(2 * nx, 2 * ey + 2)))
        for ey in range(ny))

    return Mesh(domain_id=domain.id, nodes=nodes, elements=elements,
                boundary_edges=boundary, element_size=(hx, hy))


def supports_per_wavelength(mesh: Mesh, lam: float) -> float:
    """Nodes resolving one wavelength; node spacing is h/2 for quadratic
    elements, the worst direction governs."""
    if lam <= 0:
        raise ValueError("wavelength must be positive")
    return 2.0 * lam / max(mesh.element_size)


@dataclass(frozen=True)
class MeshSchedule:
    levels: tuple[dict, ...]           # coarse -> fine, {domain id: (hx, hy)}
    band_assignment: tuple[int, ...]   # band index -> level index
    f_switch: tuple[float, ...]        # grid frequencies where the level changes


def _level_ratio(config: ModelConfig, level: dict, f: float) -> float:
    """Worst supports-per-wavelength ratio over all domains for one level."""
    worst = np.inf
    for d in config.domains:
        lam = mats.wavelength(d.kind, config.materials[d.material_id], f)
        worst = min(worst, 2.0 * lam / max(level[d.id]))
    return worst


def build_schedule(config: ModelConfig, levels) -> MeshSchedule:
    """Assign the coarsest admissible mesh level to each frequency band.

    A level is admissible for a band when every domain keeps at least
    MIN_SUPPORTS nodes per smallest wavelength at the band's upper edge.
    """
    levels = tuple(dict(lvl) for lvl in levels)
    if not levels:
        raise ValueError("need at least one candidate level")
    plan = config.frequency
    if _level_ratio(config, levels[-1], plan.f_max) < MIN_SUPPORTS:
        raise ValueError("finest level violates the meshing criterion at f_max")

    assignment = []
    for b in range(plan.n_bands):
        f_hi = plan.band_edges[b + 1]
        for li, lvl in enumerate(levels):
            if _level_ratio(config, lvl, f_hi) >= MIN_SUPPORTS:
                assignment.append(li)
                break
        else:
            raise ValueError(f"no admissible level for band {b}")
    # switch frequency: where the previously used coarser level first breaks
    # the criterion, located by bisection and snapped down to the grid
    grid = frequency_grid(plan)
    switches = []
    for b in range(1, plan.n_bands):
        if assignment[b] == assignment[b - 1]:
            continue
        coarse = levels[assignment[b - 1]]
        lo, hi = plan.band_edges[b], plan.band_edges[b + 1]
        if _level_ratio(config, coarse, lo) < MIN_SUPPORTS:
            f_star = lo
        else:
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if _level_ratio(config, coarse, mid) >= MIN_SUPPORTS:
                    lo = mid
                else:
                    hi = mid
            f_star = hi
        below = [f for f in grid if f <= f_star]
        switches.append(below[-1] if below else grid[0])

    return MeshSchedule(levels=levels, band_assignment=tuple(assignment),
                        f_switch=tuple(switches))


def dof_count(meshes: dict, kinds: dict, shared_pairs=()) -> tuple[dict, int]:
    """Per-domain and total DoF counts.

    ``shared_pairs`` lists conforming interface pairs (id_a, id_b) whose
    coincident boundary nodes are counted once; non-conforming interfaces
    keep separate DoFs on both sides.
    """
    per_node = {did: (2 if kinds[did] == "elastic" else 1) for did in meshes}
    per_domain = {did: per_node[did] * meshes[did].n_nodes for did in meshes}
    total = sum(per_domain.values())
    for a, b in shared_pairs:
        shared = _coincident_nodes(meshes[a], meshes[b])
        if per_node[a] != per_node[b]:
            raise ValueError("cannot share nodes across field kinds")
        total -= per_node[a] * len(shared)
    return per_domain, total


def _coincident_nodes(mesh_a: Mesh, mesh_b: Mesh, tol: float = 1e-12):
    """Pairs of node ids with identical coordinates on the two meshes."""
    key = {}
    for i, (x, y) in enumerate(np.round(mesh_a.nodes / max(tol, 1e-12)) * tol):
        key[(x, y)] = i
    pairs = []
    for j, (x, y) in enumerate(np.round(mesh_b.nodes / max(tol, 1e-12)) * tol):
        if (x, y) in key:
            pairs.append((key[(x, y)], j))
    return pairs


def export_mesh(mesh: Mesh) -> str:
    """Plain-text mesh dump: nodes, elements and tagged boundary edges."""
    out = io.StringIO()
    out.write(f"domain {mesh.domain_id}\n")
    out.write(f"nodes {mesh.n_nodes}\n")
    for i, (x, y) in enumerate(mesh.nodes):
        out.write(f"{i} {x:.17g} {y:.17g}\n")
    out.write(f"elements {mesh.n_elements}\n")
    for e, conn in enumerate(mesh.elements):
        out.write(f"{e} " + " ".join(str(int(n)) for n in conn) + "\n")
    for tag in ("S", "E", "N", "W"):
        traces = mesh.boundary_edges[tag]
        out.write(f"boundary {tag} {len(traces)}\n")
        for tr in traces:
            out.write(f"{tr.element} {tr.local_edge} "
                      + " ".join(str(n) for n in tr.nodes) + "\n")
    return out.getvalue()
