"""Element matrices, loads and global block assembly."""

import math

import numpy as np
import pytest
import scipy.linalg as la

from vibrofem import materials as mats
from vibrofem import shape
from vibrofem.assembly import (ModelOperator, assemble_global,
                               elastic_element, elastic_element_parts,
                               helmholtz_element, helmholtz_element_parts,
                               plane_wave_load, plane_stress_D)
from vibrofem.config import (DomainSpec, FrequencyPlan, InterfaceSpec,
                             LoadSpec, ModelConfig)
from vibrofem.meshing import generate_mesh
from vibrofem.mortar import build_couplings

ALU = mats.ElasticMaterial(E=7e10, nu=0.33, rho=2700.0, thickness=0.002)
AIR = mats.AcousticMaterial(c=343.0, rho=1.204)
UNIT_COORDS = 0.5 * (np.array(shape.LOCAL_NODES) + 1.0)


def two_domain_config(h=0.25, c=343.0):
    domains = (
        DomainSpec(id="panel", kind="elastic", rect=(0.0, 0.0, 1.0, 1.0),
                   material_id="alu"),
        DomainSpec(id="cavity", kind="acoustic", rect=(0.0, 1.0, 1.0, 2.0),
                   material_id="air"),
    )
    config = ModelConfig(
        domains=domains,
        materials={"alu": ALU, "air": mats.AcousticMaterial(c=c, rho=1.204)},
        damping_tables={},
        interfaces=(InterfaceSpec(left="panel", right="cavity",
                                  coupling="fsi"),),
        load=LoadSpec(kind="plane_wave", target_domain="panel", boundary="S",
                      amplitude=1.0, wave_speed=343.0),
        frequency=FrequencyPlan(f_min=10.0, f_max=1000.0, delta_f=10.0,
                                band_edges=(10.0, 1000.0)),
    )
    meshes = {d.id: generate_mesh(d, (h, h)) for d in domains}
    return config, meshes


def test_plane_stress_D_shape():
    D = plane_stress_D(1.0, 0.3)
    assert D[0, 0] == pytest.approx(1.0 / 0.91)
    assert D[0, 1] == pytest.approx(0.3 / 0.91)
    assert D[2, 2] == pytest.approx(0.35 / 0.91)
    np.testing.assert_allclose(D, D.T)


def test_elastic_element_rigid_body_modes():
    Kmat, Kgeo, Me = elastic_element_parts(ALU, UNIT_COORDS)
    eigs = np.sort(np.abs(la.eigvalsh(Kmat)))
    scale = eigs[-1]
    assert np.all(eigs[:3] <= 1e-10 * scale), "x, y translation and rotation"
    assert eigs[3] > 1e-6 * scale


def test_elastic_mass_total():
    _, _, Me = elastic_element_parts(ALU, UNIT_COORDS)
    # unit area, each displacement component carries the full element mass
    want = ALU.rho * ALU.thickness * 1.0
    assert Me[0::2, 0::2].sum() == pytest.approx(want, rel=1e-12)
    assert Me[1::2, 1::2].sum() == pytest.approx(want, rel=1e-12)
    assert Me[0::2, 1::2].sum() == pytest.approx(0.0, abs=1e-15)


def test_elastic_damping_scale_applies_to_material_stiffness_only():
    mat = mats.ElasticMaterial(E=7e10, nu=0.33, rho=2700.0, thickness=0.002,
                               prestress=(100.0, 200.0))
    Kmat, Kgeo, Me = elastic_element_parts(mat, UNIT_COORDS)
    Ke, _ = elastic_element(mat, 1 + 0.02j, UNIT_COORDS)
    np.testing.assert_allclose(Ke, (1 + 0.02j) * Kmat + Kgeo, atol=1e-6)


def test_geometric_stiffness_positive_semidefinite():
    mat = mats.ElasticMaterial(E=7e10, nu=0.33, rho=2700.0, thickness=0.002,
                               prestress=(1000.0, 2000.0))
    _, Kgeo, _ = elastic_element_parts(mat, UNIT_COORDS)
    eigs = la.eigvalsh(Kgeo)
    assert eigs.min() >= -1e-9 * eigs.max()


def test_helmholtz_constant_pressure_in_kernel():
    Kgrad, Mnn = helmholtz_element_parts(UNIT_COORDS)
    np.testing.assert_allclose(Kgrad @ np.ones(9), 0.0, atol=1e-12)
    assert Mnn.sum() == pytest.approx(1.0, rel=1e-12)  # unit area


def test_helmholtz_speed_scaling():
    K1, M1 = helmholtz_element(1.2 + 0j, 343.0 + 0j, 1 + 0j, UNIT_COORDS)
    K2, M2 = helmholtz_element(1.2 + 0j, 686.0 + 0j, 1 + 0j, UNIT_COORDS)
    np.testing.assert_allclose(K2, K1, atol=1e-12)
    np.testing.assert_allclose(M2, M1 / 4.0, atol=1e-15)


def test_cavity_resonances_against_analytic():
    # rigid-walled unit square cavity: f_mn = c/2 * sqrt(m^2 + n^2)
    dom = DomainSpec(id="c", kind="acoustic", rect=(0.0, 0.0, 1.0, 1.0),
                     material_id="air")
    mesh = generate_mesh(dom, (0.1, 0.1))
    from vibrofem.assembly import _assemble_primitives
    prim = _assemble_primitives(mesh, "acoustic", AIR)
    lam = la.eigh(prim["Kgrad"].toarray(), prim["Mnn"].toarray(),
                  eigvals_only=True)
    c = AIR.c
    f_num = c * np.sqrt(np.clip(lam, 0.0, None)) / (2 * np.pi)
    f_num = np.sort(f_num[f_num > 1.0])
    f_exact = sorted(c / 2 * math.hypot(m, n)
                     for m in range(4) for n in range(4) if m or n)[:6]
    for fe, fn in zip(f_exact, f_num[:6]):
        assert abs(fn - fe) <= 0.01 * fe


def test_plane_wave_load_static_limit():
    dom = DomainSpec(id="p", kind="elastic", rect=(0.0, 0.0, 2.0, 1.0),
                     material_id="alu")
    mesh = generate_mesh(dom, (0.5, 0.5))
    load = LoadSpec(kind="plane_wave", target_domain="p", boundary="S",
                    amplitude=3.0, wave_speed=1e12)
    fvec = plane_wave_load(load, 10.0, mesh)
    # k -> 0: resultant equals amplitude * edge length along inward normal +y
    assert fvec[1::2].sum() == pytest.approx(3.0 * 2.0, rel=1e-9)
    assert np.abs(fvec[0::2]).max() == 0.0


def test_plane_wave_load_one_wavelength_winding():
    dom = DomainSpec(id="p", kind="elastic", rect=(0.0, 0.0, 1.0, 1.0),
                     material_id="alu")
    mesh = generate_mesh(dom, (0.05, 0.05))
    f = 343.0  # wavelength equals the edge length
    load = LoadSpec(kind="plane_wave", target_domain="p", boundary="S",
                    amplitude=1.0, wave_speed=343.0)
    fvec = plane_wave_load(load, f, mesh)
    # the travelling phase makes one full turn over the edge
    order = np.argsort(mesh.nodes[:, 0])
    on_edge = order[mesh.nodes[order, 1] == 0.0]
    phases = np.unwrap(np.angle(fvec[2 * on_edge + 1]))
    assert phases[0] - phases[-1] == pytest.approx(2 * np.pi, rel=1e-2)
    # and the resultant of a full period nearly cancels
    assert abs(fvec[1::2].sum()) < 1e-2 * np.abs(fvec[1::2]).sum()


def test_global_block_structure_and_coupling_sign():
    config, meshes = two_domain_config()
    couplings = build_couplings(config, meshes)
    sys_ = assemble_global(config, meshes, couplings, 100.0)
    n_s = 2 * meshes["panel"].n_nodes
    n_f = meshes["cavity"].n_nodes
    K = sys_.assemble_K().toarray()
    M = sys_.assemble_M().toarray()
    C = couplings[0][2].toarray()
    np.testing.assert_allclose(K[:n_s, n_s:], -C, atol=1e-14)
    np.testing.assert_allclose(M[n_s:, :n_s], 1.204 * C.T, atol=1e-14)
    # one-sided coupling leaves the transposed corners empty
    assert np.abs(K[n_s:, :n_s]).max() == 0.0
    assert np.abs(M[:n_s, n_s:]).max() == 0.0
    assert K.shape == (n_s + n_f, n_s + n_f)


def test_operator_combines_K_and_M():
    config, meshes = two_domain_config()
    couplings = build_couplings(config, meshes)
    op = ModelOperator(config, meshes, couplings)
    f = 137.0
    omega = 2 * np.pi * f
    A = op.operator(f).toarray()
    np.testing.assert_allclose(
        A, op.K(f).toarray() - omega ** 2 * op.M(f).toarray(), atol=1e-6)


def test_uncoupled_system_is_block_diagonal():
    config, meshes = two_domain_config()
    sys_ = assemble_global(config, meshes, [], 100.0)
    n_s = 2 * meshes["panel"].n_nodes
    K = sys_.assemble_K().toarray()
    assert np.abs(K[:n_s, n_s:]).max() == 0.0
    assert np.abs(K[n_s:, :n_s]).max() == 0.0


def test_equivalent_fluid_block_is_dissipative(bench):
    # porous domain stiffness uses the complex JCA density; the resulting
    # operator must dissipate energy: Im(p^H A p) behaves like a loss term
    from vibrofem.assembly import _assemble_primitives
    liner = bench.domain("liner")
    mesh = generate_mesh(liner, (0.0625, 0.0625))
    mat = bench.material_of("liner")
    prim = _assemble_primitives(mesh, "equivalent_fluid", mat)
    f = 400.0
    rho_eff, c_eff = mats.jca_effective(mat, f)
    A = (prim["Kgrad"] / rho_eff
         - (2 * np.pi * f) ** 2 * prim["Mnn"] / (rho_eff * c_eff ** 2))
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = rng.standard_normal(mesh.n_nodes)
        q = complex(p @ (A @ p))
        assert q.imag != 0.0


def test_assembly_is_deterministic():
    config, meshes = two_domain_config()
    couplings = build_couplings(config, meshes)
    A1 = assemble_global(config, meshes, couplings, 333.0).assemble_K()
    A2 = assemble_global(config, meshes, couplings, 333.0).assemble_K()
    assert np.array_equal(A1.data, A2.data)
    assert np.array_equal(A1.indices, A2.indices)
