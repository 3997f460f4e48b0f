"""Mesh generation, the sampling criterion and the mesh schedule."""

import numpy as np
import pytest

from vibrofem import materials as mats
from vibrofem.config import DomainSpec
from vibrofem.meshing import (MIN_SUPPORTS, build_schedule, dof_count,
                              generate_mesh, supports_per_wavelength)


def square(did="d", kind="acoustic", w=1.0, h=1.0):
    return DomainSpec(id=did, kind=kind, rect=(0.0, 0.0, w, h),
                      material_id="m")


def test_unit_square_2x2():
    mesh = generate_mesh(square(), (0.5, 0.5))
    assert mesh.n_elements == 4
    assert mesh.n_nodes == 25
    assert mesh.element_size == (0.5, 0.5)


def test_single_element():
    mesh = generate_mesh(square(), (1.0, 1.0))
    assert mesh.n_elements == 1
    assert mesh.n_nodes == 9


def test_rectangle_3x1():
    mesh = generate_mesh(square(w=3.0, h=1.0), (1.0, 1.0))
    assert mesh.n_elements == 3
    assert mesh.n_nodes == 21


def test_node_count_formula():
    for n in (1, 2, 3, 5, 8):
        mesh = generate_mesh(square(), (1.0 / n, 1.0 / n))
        assert mesh.n_nodes == (2 * n + 1) ** 2


def test_midside_nodes_are_means():
    mesh = generate_mesh(square(w=2.0), (0.4, 0.25))
    for conn in mesh.elements:
        xy = mesh.nodes[conn]
        np.testing.assert_allclose(xy[4], 0.5 * (xy[0] + xy[1]), atol=1e-14)
        np.testing.assert_allclose(xy[8], xy[:4].mean(axis=0), atol=1e-14)


def test_boundary_edges_cover_perimeter():
    mesh = generate_mesh(square(w=2.0, h=1.0), (0.5, 0.5))
    assert len(mesh.boundary_edges["S"]) == 4
    assert len(mesh.boundary_edges["N"]) == 4
    assert len(mesh.boundary_edges["W"]) == 2
    assert len(mesh.boundary_edges["E"]) == 2
    for trace in mesh.boundary_edges["S"]:
        assert np.all(mesh.nodes[list(trace.nodes), 1] == 0.0)


def test_supports_per_wavelength_examples():
    mesh = generate_mesh(square(), (0.2, 0.2))
    assert supports_per_wavelength(mesh, 1.0) == pytest.approx(10.0)
    assert supports_per_wavelength(mesh, 2.0) == pytest.approx(20.0)


def test_supports_doubles_on_refinement():
    coarse = generate_mesh(square(), (0.25, 0.25))
    fine = generate_mesh(square(), (0.125, 0.125))
    assert supports_per_wavelength(fine, 0.7) \
        == pytest.approx(2 * supports_per_wavelength(coarse, 0.7))


def test_dof_count_examples():
    ac = generate_mesh(square("a"), (0.5, 0.5))
    el = generate_mesh(square("b", kind="elastic"), (0.5, 0.5))
    per, total = dof_count({"a": ac}, {"a": "acoustic"})
    assert per == {"a": 25} and total == 25

    # two stacked domains sharing a conforming edge of 5 nodes
    lower = generate_mesh(square("lo"), (0.5, 0.5))
    upper = generate_mesh(DomainSpec(id="hi", kind="acoustic",
                                     rect=(0.0, 1.0, 1.0, 2.0),
                                     material_id="m"), (0.5, 0.5))
    kinds = {"lo": "acoustic", "hi": "acoustic"}
    _, conforming = dof_count({"lo": lower, "hi": upper}, kinds,
                              shared_pairs=[("lo", "hi")])
    assert conforming == 45
    _, split = dof_count({"lo": lower, "hi": upper}, kinds)
    assert split == 50
    assert conforming < split

    per2, t2 = dof_count({"a": ac, "b": el},
                         {"a": "acoustic", "b": "elastic"})
    assert per2["b"] == 50 and t2 == 75


def test_schedule_on_benchmark(bench):
    sched = build_schedule(bench, bench.solver.mesh_levels)
    assert sched.band_assignment == (0, 1, 2)
    assert len(sched.f_switch) == 2
    # every band satisfies the criterion at its upper edge, exhaustively
    for b, li in enumerate(sched.band_assignment):
        f_hi = bench.frequency.band_edges[b + 1]
        lvl = sched.levels[li]
        for d in bench.domains:
            lam = mats.wavelength(d.kind, bench.materials[d.material_id], f_hi)
            assert 2.0 * lam / max(lvl[d.id]) >= MIN_SUPPORTS, (b, d.id)


def test_schedule_picks_coarsest_admissible(bench):
    sched = build_schedule(bench, bench.solver.mesh_levels)
    # the next coarser level must fail somewhere at the band's upper edge
    for b, li in enumerate(sched.band_assignment):
        if li == 0:
            continue
        f_hi = bench.frequency.band_edges[b + 1]
        coarser = sched.levels[li - 1]
        worst = min(
            2.0 * mats.wavelength(d.kind, bench.materials[d.material_id], f_hi)
            / max(coarser[d.id]) for d in bench.domains)
        assert worst < MIN_SUPPORTS


def test_schedule_rejects_inadmissible_finest(bench):
    too_coarse = [{d.id: (0.5, 0.5) for d in bench.domains}]
    with pytest.raises(ValueError):
        build_schedule(bench, too_coarse)


def test_switch_frequencies_on_grid(bench):
    sched = build_schedule(bench, bench.solver.mesh_levels)
    for f in sched.f_switch:
        assert (f - 10.0) % 2.0 == pytest.approx(0.0, abs=1e-9)
        assert 10.0 <= f <= 1000.0
