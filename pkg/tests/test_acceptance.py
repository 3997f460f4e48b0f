"""Acceptance criteria for the three efficiency strategies, one test per
criterion, all on the shipped benchmark model unless a criterion is about
an isolated kernel.

The heavyweight artifacts (direct references, iterative probes and the
reduced models on the benchmark) are built once in module fixtures and
shared across the criteria they certify.
"""

import math
import time

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp

from vibrofem import materials as mats
from vibrofem import shape
from vibrofem.assembly import ModelOperator, _assemble_primitives
from vibrofem.cli import _mor_fom, write_csv
from vibrofem.config import DomainSpec, InterfaceSpec, frequency_grid
from vibrofem.meshing import (MIN_SUPPORTS, build_schedule,
                              generate_mesh)
from vibrofem.mor import (FullOrderModel, build_local_roms,
                          candidate_frequencies, krylov_block,
                          relative_error)
from vibrofem.mortar import assemble_coupling, build_couplings, \
    detect_interfaces
from vibrofem.solvers import (AdditiveSchwarzPrecond, BlockJacobiPrecond,
                              DomainGrouping, build_level_meshes,
                              cabin_slice, direct_solve, frequency_sweep,
                              mean_spl, solve_iterative)

SAMPLE_FREQS = [50.0, 150.0, 250.0, 350.0, 450.0, 550.0,
                650.0, 800.0, 900.0, 1000.0]
FIXED_BUDGET = 8  # GMRES iterations for the overlap error ordering protocol


def _grouping(bench, overlap):
    return DomainGrouping(groups=tuple(tuple(g) for g in bench.solver.groups),
                          overlap=overlap, variant=bench.solver.variant)


@pytest.fixture(scope="module")
def probes(bench):
    """Per-sample-frequency data: direct reference and iterative solves at
    overlaps 0, 1 and 2, plus fixed-budget solves for the error ordering."""
    schedule = build_schedule(bench, bench.solver.mesh_levels)
    ops = {}
    out = []
    t0 = time.perf_counter()
    for f in SAMPLE_FREQS:
        li = schedule.band_assignment[bench.frequency.band_of(f)]
        if li not in ops:
            meshes = build_level_meshes(bench, schedule.levels[li])
            ops[li] = ModelOperator(bench, meshes,
                                    build_couplings(bench, meshes))
        op = ops[li]
        A, b = op.operator(f), op.load(f)
        cab = cabin_slice(bench, op.block_map)
        x_ref, ref_stats = direct_solve(A, b)
        spl_ref = mean_spl(x_ref[cab])
        rec = {"f": f, "op": op, "A": A, "b": b, "cab": cab,
               "spl_ref": spl_ref, "direct_memory": ref_stats.factor_memory,
               "it": {}, "err": {}, "budget_err": {}}
        for ov in (0, 1, 2):
            x, st = solve_iterative(A, b, _grouping(bench, ov), op.block_map,
                                    tol_abs=bench.solver.tol_abs,
                                    max_it=bench.solver.max_it,
                                    restart=bench.solver.restart)
            assert st.converged, (f, ov)
            rec["it"][ov] = st.iterations
            rec["err"][ov] = abs(mean_spl(x[cab]) - spl_ref) / abs(spl_ref)
            if ov == 1:
                rec["precond_memory"] = st.factor_memory
        for ov in (1, 2):
            xb, _ = solve_iterative(A, b, _grouping(bench, ov), op.block_map,
                                    tol_abs=1e-300, max_it=FIXED_BUDGET)
            rec["budget_err"][ov] = \
                abs(mean_spl(xb[cab]) - spl_ref) / abs(spl_ref)
        out.append(rec)
    return {"records": out, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def benchmark_roms(bench):
    fom, _ = _mor_fom(bench)
    grid = frequency_grid(bench.frequency)
    band = (bench.frequency.f_min, bench.frequency.f_max)
    t0 = time.perf_counter()
    roms = build_local_roms(fom, grid, bench.mor, band)
    return {"fom": fom, "grid": grid, "roms": roms,
            "build_time": time.perf_counter() - t0}


def stacked_pair(h_s, h_f):
    dom_s = DomainSpec(id="s", kind="elastic", rect=(0.0, 0.0, 1.0, 1.0),
                       material_id="m")
    dom_f = DomainSpec(id="f", kind="acoustic", rect=(0.0, 1.0, 1.0, 2.0),
                       material_id="a")
    return generate_mesh(dom_s, (h_s, h_s)), generate_mesh(dom_f, (h_f, h_f))


SPEC = InterfaceSpec(left="s", right="f", coupling="fsi")


def test_mortar_conforming_limit():
    """Criterion: on matching meshes the mortar matrix equals the direct
    single-mesh edge quadrature to 1e-10, in under a second."""
    t0 = time.perf_counter()
    ms, mf = stacked_pair(0.125, 0.125)
    elems = detect_interfaces(ms, mf, SPEC)
    C = assemble_coupling(elems, ms, mf).C

    xg, wg = shape.gauss1d(3)
    ref = np.zeros((2 * ms.n_nodes, mf.n_nodes))
    for tr_s, tr_f in zip(ms.boundary_edges["N"], mf.boundary_edges["S"]):
        jac = 0.125 / 2.0
        for xi, w in zip(xg, wg):
            N = shape.shape1d(xi)
            for a, na in enumerate(tr_s.nodes):
                for b, nb in enumerate(tr_f.nodes):
                    ref[2 * na + 1, nb] += w * jac * N[a] * N[b]
    assert np.abs(C.toarray() - ref).max() <= 1e-10
    assert time.perf_counter() - t0 < 1.0


def test_mortar_partition_of_unity_contraction():
    """Criterion: contracting the coupling matrix with all-ones vectors on
    both sides returns the interface length to 1e-12 for element ratios
    1:1, 2:1 and 3:2 across the interface."""
    for n_s, n_f in [(4, 4), (4, 2), (6, 4)]:
        ms, mf = stacked_pair(1.0 / n_s, 1.0 / n_f)
        C = assemble_coupling(detect_interfaces(ms, mf, SPEC), ms, mf).C
        assert abs(C.sum() - 1.0) <= 1e-12, (n_s, n_f)


def test_inverse_map_round_trip():
    """Criterion: Newton inverse map round trips 1000 random points on
    distorted quadrilaterals to 1e-10 in reference coordinates."""
    rng = np.random.default_rng(42)
    corners0 = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    worst = 0.0
    for _ in range(1000):
        corners = corners0 + rng.uniform(-0.15, 0.15, size=(4, 2))
        coords = np.empty((9, 2))
        coords[:4] = corners
        coords[4] = 0.5 * (corners[0] + corners[1])
        coords[5] = 0.5 * (corners[1] + corners[2])
        coords[6] = 0.5 * (corners[2] + corners[3])
        coords[7] = 0.5 * (corners[3] + corners[0])
        coords[8] = corners.mean(axis=0)
        xi0 = rng.uniform(-0.98, 0.98, 2)
        pt = shape.forward_map(coords, xi0[0], xi0[1])
        xi = shape.inverse_map(coords, pt)
        worst = max(worst, float(np.abs(xi - xi0).max()))
    assert worst <= 1e-10


def test_schedule_criterion_exhaustive(bench):
    """Criterion: every frequency of the full sweep grid is served by a
    mesh level keeping at least ten supports per smallest wavelength in
    every domain."""
    schedule = build_schedule(bench, bench.solver.mesh_levels)
    for f in frequency_grid(bench.frequency):
        level = schedule.levels[
            schedule.band_assignment[bench.frequency.band_of(f)]]
        for d in bench.domains:
            lam = mats.wavelength(d.kind, bench.materials[d.material_id], f)
            assert 2.0 * lam / max(level[d.id]) >= MIN_SUPPORTS, (f, d.id)


def test_cavity_resonances_fine_mesh(bench):
    """Criterion: rigid-wall resonances of the cabin quadrant on the fine
    mesh match the analytic values within one percent."""
    cabin = bench.domain("cabin")
    mesh = generate_mesh(cabin, (0.025, 0.025))
    air = bench.material_of("cabin")
    prim = _assemble_primitives(mesh, "acoustic", air)
    lam = la.eigh(prim["Kgrad"].toarray(), prim["Mnn"].toarray(),
                  eigvals_only=True)
    f_num = air.c * np.sqrt(np.clip(lam, 0.0, None)) / (2 * np.pi)
    f_num = np.sort(f_num[f_num > 1.0])
    L = 0.5
    f_exact = sorted(air.c / 2.0 * math.hypot(m / L, n / L)
                     for m in range(3) for n in range(3) if m or n)[:5]
    for fe, fn in zip(f_exact, f_num[:5]):
        assert abs(fn - fe) <= 0.01 * fe


def test_iterative_solver_accuracy_and_budget(probes, bench):
    """Criterion: GMRES with the overlap-1 four-subdomain preconditioner
    matches the direct cabin SPL within 1e-2 at ten frequencies spanning
    all bands, within 150 iterations each and five minutes total."""
    for rec in probes["records"]:
        assert rec["err"][1] <= 1e-2, rec["f"]
        assert rec["it"][1] <= bench.solver.max_it, rec["f"]
    assert probes["elapsed"] < 300.0


def test_overlap_iteration_ordering(probes):
    """Criterion: adding one overlap layer never increases the iteration
    count at any probed frequency."""
    for rec in probes["records"]:
        assert rec["it"][1] <= rec["it"][0], rec["f"]


def test_overlap_error_ordering_fixed_budget(probes):
    """Criterion: at a fixed iteration budget the wider overlap gives the
    smaller mean SPL error."""
    e1 = np.mean([rec["budget_err"][1] for rec in probes["records"]])
    e2 = np.mean([rec["budget_err"][2] for rec in probes["records"]])
    assert e2 <= e1


def test_subdomain_factors_smaller_than_monolithic(probes):
    """Criterion: the summed subdomain LU storage stays below the
    monolithic sparse LU at every probed frequency."""
    for rec in probes["records"]:
        assert rec["precond_memory"] < rec["direct_memory"], rec["f"]


def test_zero_overlap_schwarz_equals_block_jacobi(probes, bench):
    """Criterion: the overlap-0 Schwarz preconditioner coincides with
    block Jacobi to 1e-15 on 20 random residual probes."""
    rec = probes["records"][0]
    A, op = rec["A"], rec["op"]
    g0 = _grouping(bench, 0)
    asz = AdditiveSchwarzPrecond(A, g0, op.block_map)
    bj = BlockJacobiPrecond(A, g0, op.block_map)
    rng = np.random.default_rng(99)
    n = A.shape[0]
    for _ in range(20):
        r = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ya, yb = asz.apply(r), bj.apply(r)
        assert np.linalg.norm(ya - yb) <= 1e-15 * np.linalg.norm(yb)


def test_mor_moment_matching_dense_instance():
    """Criterion: the rational Arnoldi projection matches the shifted
    moments of a frozen-coefficient 200-DoF instance to 1e-8."""
    rng = np.random.default_rng(0)
    n = 200
    X = rng.standard_normal((n, n))
    K = sp.csc_matrix((X @ X.T + n * np.eye(n)) * (1 + 0.02j))
    Y = rng.standard_normal((n, n)) * 0.05
    M = sp.csc_matrix(Y @ Y.T + np.eye(n))
    b = rng.standard_normal(n)
    c = np.zeros(n)
    c[n // 3] = 1.0
    fom = FullOrderModel(stiffness=lambda f: K, mass=lambda f: M,
                         load=lambda f: b, c_out=c, n=n)
    f0, m = 35.0, 5
    Q, _ = krylov_block(fom, f0, m)
    At = fom.operator(f0).toarray()
    Md = M.toarray()
    mom_full, v = [], np.linalg.solve(At, b)
    for _ in range(m):
        mom_full.append(c @ v)
        v = np.linalg.solve(At, Md @ v)
    Vh = Q.conj().T
    AtR, MR, bR, cR = Vh @ At @ Q, Vh @ Md @ Q, Vh @ b, c @ Q
    mom_red, vr = [], np.linalg.solve(AtR, bR)
    for _ in range(m):
        mom_red.append(cR @ vr)
        vr = np.linalg.solve(AtR, MR @ vr)
    for j, (mf, mr) in enumerate(zip(mom_full, mom_red)):
        assert abs(mf - mr) <= 1e-8 * abs(mf), f"moment {j}"


def test_mor_certification(benchmark_roms, bench):
    """Criterion: the benchmark reduced models certify to 1e-2 relative
    output error on sweep frequencies disjoint from the greedy candidate
    set, with basis dimension at most n/50 and a speedup over the direct
    full-order sweep."""
    fom = benchmark_roms["fom"]
    grid = benchmark_roms["grid"]
    roms = benchmark_roms["roms"]
    assert all(r.converged for r in roms)
    for r in roms:
        assert r.r <= fom.n / 50, (r.window, r.r, fom.n)

    cand = set()
    for r in roms:
        cand |= set(candidate_frequencies(grid, r.window,
                                          bench.mor.candidate_stride))
    disjoint = [f for f in grid if f not in cand][::10]
    assert len(disjoint) >= 30

    def rom_for(f):
        return next(r for r in roms if r.contains(f))

    t_fom = t_rom = 0.0
    y_full, y_red = [], []
    for f in disjoint:
        t0 = time.perf_counter()
        y_full.append(fom.output(fom.solve(f)))
        t_fom += time.perf_counter() - t0
        t0 = time.perf_counter()
        y_red.append(rom_for(f).output(f))
        t_rom += time.perf_counter() - t0
    _, eps_max, _, _ = relative_error(np.array(y_full), np.array(y_red))
    assert eps_max <= bench.mor.tol
    assert t_fom / t_rom > 1.0


def test_prestress_values():
    """Criterion: the pressurisation (42524 Pa, 1.37 m) maps to membrane
    tensions (29128.94, 58257.88) N/m within 1e-6 relative."""
    tx, ty = mats.prestress_from_pressurisation(42524.0, 1.37)
    assert abs(tx - 29128.94) <= 1e-6 * 29128.94
    assert abs(ty - 58257.88) <= 1e-6 * 58257.88


def test_sweep_csv_byte_determinism(bench, tmp_path):
    """Criterion: repeating a direct sweep writes byte-identical FRF CSV
    artifacts."""
    freqs = [50.0, 150.0, 250.0, 350.0, 450.0, 550.0]
    paths = []
    for tag in ("a", "b"):
        res = frequency_sweep(bench, solver="direct", frequencies=freqs)
        rows = [[f, p.real, p.imag, spl]
                for f, p, spl in zip(res.freqs, res.frf, res.spl)]
        path = tmp_path / f"frf_{tag}.csv"
        write_csv(path, ["f_hz", "re_p", "im_p", "spl_db"], rows)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
