"""Command-line driver: configuration to meshes, assembled matrices,
frequency sweeps, reduced models and comparison reports.

All value artifacts are CSV (comma separator, ``.`` decimal, header row,
LF endings) or Matrix Market; timing columns live in separate files so
value CSVs are byte-reproducible run to run.  Exit codes: 0 ok, 2 bad
configuration, 3 solver failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import mor as mor_mod
from .assembly import ModelOperator, dump_matrix_market
from .config import ConfigError, ModelConfig, frequency_grid, load_config
from .meshing import build_schedule, dof_count
from .mortar import build_couplings
from .solvers import (DomainGrouping, build_level_meshes, cabin_slice,
                      direct_solve, frequency_sweep, mean_spl,
                      probe_dof_index)

ROM_FORMAT_VERSION = 1


class VerificationFailure(RuntimeError):
    """A verification bound was exceeded."""


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12e")
    return str(value)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _config_hash(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _schedule_summary(config: ModelConfig):
    schedule = build_schedule(config, config.solver.mesh_levels)
    return schedule, [
        {"band": b,
         "f_lo": config.frequency.band_edges[b],
         "f_hi": config.frequency.band_edges[b + 1],
         "level": schedule.band_assignment[b]}
        for b in range(config.frequency.n_bands)]


def _band_dofs(config: ModelConfig, schedule):
    kinds = {d.id: d.kind for d in config.domains}
    out = []
    for b, li in enumerate(schedule.band_assignment):
        meshes = build_level_meshes(config, schedule.levels[li])
        per_domain, total = dof_count(meshes, kinds)
        out.append({"band": b, "level": li, "per_domain": per_domain,
                    "total": total})
    return out


def write_manifest(out: Path, subcommand: str, config_path: Path,
                   config: ModelConfig, outputs, wall_time: float):
    schedule, bands = _schedule_summary(config)
    manifest = {
        "subcommand": subcommand,
        "config_hash": _config_hash(config_path),
        "mesh_schedule": bands,
        "solver": {"method": config.solver.method,
                   "overlap": config.solver.overlap,
                   "variant": config.solver.variant,
                   "tol_abs": config.solver.tol_abs,
                   "max_it": config.solver.max_it,
                   "groups": [list(g) for g in config.solver.groups]},
        "dofs_per_band": _band_dofs(config, schedule),
        "outputs": [str(p) for p in outputs],
        "wall_time_s": wall_time,
    }
    for p in outputs:
        if not Path(p).exists():
            raise RuntimeError(f"manifest lists missing output {p}")
    path = out / f"manifest_{subcommand}.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def cmd_mesh(args, config: ModelConfig, out: Path):
    schedule, _ = _schedule_summary(config)
    kinds = {d.id: d.kind for d in config.domains}
    rows = []
    for b, li in enumerate(schedule.band_assignment):
        meshes = build_level_meshes(config, schedule.levels[li])
        per_domain, total = dof_count(meshes, kinds)
        row = [b, config.frequency.band_edges[b],
               config.frequency.band_edges[b + 1], li]
        row += [per_domain[d.id] for d in config.domains]
        row.append(total)
        rows.append(row)
    header = ["band", "f_lo_hz", "f_hi_hz", "level"]
    header += [f"dofs_{d.id}" for d in config.domains] + ["dofs_total"]
    path = out / "schedule.csv"
    write_csv(path, header, rows)

    from . import materials as mats
    lam_path = out / "wavelengths.csv"
    lam_rows = [[f] + [mats.wavelength(d.kind, config.materials[d.material_id], f)
                       for d in config.domains]
                for f in frequency_grid(config.frequency)]
    write_csv(lam_path, ["f_hz"] + [f"lambda_{d.id}_m" for d in config.domains],
              lam_rows)
    return [path, lam_path]


def cmd_assemble(args, config: ModelConfig, out: Path):
    f = args.frequency if args.frequency is not None else config.frequency.f_min
    schedule, _ = _schedule_summary(config)
    level = schedule.levels[schedule.band_assignment[config.frequency.band_of(f)]]
    meshes = build_level_meshes(config, level)
    couplings = build_couplings(config, meshes)
    op = ModelOperator(config, meshes, couplings)
    sysm = op.system(f)
    outputs = []
    for name, A in (("K", sysm.assemble_K()), ("M", sysm.assemble_M()),
                    ("A", op.operator(f))):
        path = out / f"{name}.mtx"
        dump_matrix_market(path, A, comment=f"{name} at {f} Hz")
        outputs.append(path)
    for sid, fid, C in couplings:
        path = out / f"C_{sid}_{fid}.mtx"
        dump_matrix_market(path, C, comment=f"coupling {sid}-{fid}")
        outputs.append(path)
    b = op.load(f)
    path = out / "load.csv"
    write_csv(path, ["dof", "re", "im"],
              [[i, v.real, v.imag] for i, v in enumerate(b)])
    outputs.append(path)

    # pressure trace of the incident wave along the loaded edge, for the
    # phase-snapshot figure
    load = config.load
    mesh = meshes[load.target_domain]
    axis = 1 if load.boundary in ("W", "E") else 0
    node_ids = sorted(
        {n for tr in mesh.boundary_edges[load.boundary] for n in tr.nodes},
        key=lambda n: mesh.nodes[n, axis])
    coords = [float(mesh.nodes[n, axis]) for n in node_ids]
    s0 = coords[0] if load.direction == 1 else coords[-1]
    k = 2.0 * np.pi * f / load.wave_speed
    phase_rows = []
    for s in coords:
        arc = abs(s - s0)
        p = load.amplitude * np.exp(-1j * k * arc)
        phase_rows.append([f, arc, p.real, p.imag, float(np.angle(p))])
    phase_path = out / "edge_phase.csv"
    write_csv(phase_path, ["f_hz", "s_m", "re_p", "im_p", "phase_rad"],
              phase_rows)
    outputs.append(phase_path)
    return outputs


def _grouping(config: ModelConfig, args) -> DomainGrouping:
    groups = config.solver.groups or tuple((d.id,) for d in config.domains)
    overlap = args.overlap if args.overlap is not None else config.solver.overlap
    return DomainGrouping(groups=groups, overlap=overlap,
                          variant=config.solver.variant)


def cmd_sweep(args, config: ModelConfig, out: Path):
    solver = args.solver
    grouping = None if solver == "direct" else _grouping(config, args)
    result = frequency_sweep(config, solver=solver, grouping=grouping,
                             warm_start=not args.no_warm_start)
    tag = solver
    frf_path = out / f"frf_{tag}.csv"
    write_csv(frf_path,
              ["f_hz", "re_p", "im_p", "abs_db", "spl_db"],
              [[f, y.real, y.imag,
                20.0 * np.log10(max(abs(y), 1e-300) / 20e-6), spl]
               for f, y, spl in zip(result.freqs, result.frf, result.spl)])
    stats_path = out / f"stats_{tag}.csv"
    write_csv(stats_path,
              ["f_hz", "band", "iterations", "residual", "factor_memory_bytes",
               "converged"],
              [[f, b, st.iterations,
                st.residual_history[-1] if st.residual_history else 0.0,
                st.factor_memory, int(st.converged)]
               for f, b, st in zip(result.freqs, result.bands, result.stats)])
    timings_path = out / f"timings_{tag}.csv"
    write_csv(timings_path, ["f_hz", "factor_time_s", "solve_time_s"],
              [[f, st.factor_time, st.solve_time]
               for f, st in zip(result.freqs, result.stats)])
    return [frf_path, stats_path, timings_path]


def _mor_fom(config: ModelConfig):
    """MOR full-order model: finest mesh level, so the reduced model
    accelerates the highest-fidelity sweep."""
    level = config.solver.mesh_levels[-1]
    meshes = build_level_meshes(config, level)
    op = ModelOperator(config, meshes, build_couplings(config, meshes))
    probe = probe_dof_index(config, meshes, op.block_map)
    return mor_mod.fom_from_operator(op, probe), op


def save_roms(path: Path, roms):
    payload = {"version": np.array(ROM_FORMAT_VERSION),
               "n_windows": np.array(len(roms)),
               "windows": np.array([r.window for r in roms])}
    for k, r in enumerate(roms):
        payload[f"V{k}"] = r.V
        payload[f"points{k}"] = np.array(r.expansion_points)
        payload[f"errlog{k}"] = np.array(r.error_log)
        payload[f"flags{k}"] = np.array([r.converged, r.stalled,
                                         r.budget_exhausted])
    np.savez_compressed(path, **payload)


def load_roms(path: Path, fom) -> list:
    data = np.load(path)
    if int(data["version"]) != ROM_FORMAT_VERSION:
        raise ConfigError(f"unsupported ROM container version in {path}")
    roms = []
    for k in range(int(data["n_windows"])):
        flags = data[f"flags{k}"]
        roms.append(mor_mod.ReducedModel(
            fom=fom, V=data[f"V{k}"],
            window=tuple(data["windows"][k]),
            expansion_points=list(data[f"points{k}"]),
            error_log=[tuple(e) for e in data[f"errlog{k}"]],
            converged=bool(flags[0]), stalled=bool(flags[1]),
            budget_exhausted=bool(flags[2])))
    return roms


def cmd_mor(args, config: ModelConfig, out: Path):
    fom, _ = _mor_fom(config)
    grid = frequency_grid(config.frequency)
    band = (config.frequency.f_min, config.frequency.f_max)
    rom_path = out / "rom.npz"
    if args.action == "build":
        roms = mor_mod.build_local_roms(fom, grid, config.mor, band)
        save_roms(rom_path, roms)
        summary = out / "rom_summary.csv"
        write_csv(summary,
                  ["window_lo_hz", "window_hi_hz", "r", "n_points",
                   "eps_max_candidates", "converged"],
                  [[r.window[0], r.window[1], r.r, len(r.expansion_points),
                    max((e for _, e in r.error_log), default=0.0),
                    int(r.converged)] for r in roms])
        windows = out / "windows.csv"
        write_csv(windows, ["window_lo_hz", "window_hi_hz"],
                  [[r.window[0], r.window[1]] for r in roms])
        return [rom_path, summary, windows]
    roms = load_roms(rom_path, fom)
    if args.action == "sweep":
        sweep = mor_mod.rom_sweep(roms, grid)
        frf = out / "frf_mor.csv"
        write_csv(frf, ["f_hz", "re_p", "im_p", "abs_db", "window"],
                  [[f, y.real, y.imag,
                    20.0 * np.log10(max(abs(y), 1e-300) / 20e-6), w]
                   for f, y, w in zip(sweep.freqs, sweep.frf,
                                      sweep.window_index)])
        timings = out / "timings_mor.csv"
        write_csv(timings, ["f_hz", "solve_time_s"],
                  list(zip(sweep.freqs, sweep.rom_time)))
        return [frf, timings]
    if args.action == "verify":
        candset = set()
        for r in roms:
            candset |= {f for f, _ in r.error_log}
        ver = [f for f in grid if f not in candset][::args.stride]
        if not ver:
            raise ConfigError("verification grid is empty")
        sweep = mor_mod.rom_sweep(roms, ver, time_against_fom=True)
        y_full = np.array([fom.output(fom.solve(f)) for f in ver])
        eps, eps_max, k, _ = mor_mod.relative_error(y_full,
                                                    np.array(sweep.frf))
        err = out / "error_mor.csv"
        write_csv(err, ["f_hz", "rel_error"], list(zip(ver, eps)))
        speed = out / "speedup_mor.csv"
        write_csv(speed, ["f_hz", "rom_time_s", "direct_time_s"],
                  list(zip(ver, sweep.rom_time, sweep.fom_time)))
        if eps_max > config.mor.tol:
            raise VerificationFailure(
                f"ROM error {eps_max:.3e} at {ver[k]} Hz exceeds "
                f"tolerance {config.mor.tol}")
        return [err, speed]
    raise ConfigError(f"unknown mor action {args.action!r}")


def cmd_verify(args, config: ModelConfig, out: Path):
    """Iterative solver vs direct reference at sampled frequencies."""
    grid = frequency_grid(config.frequency)
    stride = max(len(grid) // args.samples, 1)
    sample = grid[::stride][:args.samples]
    grouping = _grouping(config, args)
    solver = args.solver
    schedule, _ = _schedule_summary(config)
    rows = []
    worst = 0.0
    worst_f = sample[0]
    from .solvers import solve_iterative
    for f in sample:
        li = schedule.band_assignment[config.frequency.band_of(f)]
        meshes = build_level_meshes(config, schedule.levels[li])
        op = ModelOperator(config, meshes, build_couplings(config, meshes))
        cab = cabin_slice(config, op.block_map)
        A = op.operator(f)
        b = op.load(f)
        x_ref, _ = direct_solve(A, b)
        x_it, st = solve_iterative(
            A, b, grouping, op.block_map, tol_abs=config.solver.tol_abs,
            max_it=config.solver.max_it, restart=config.solver.restart,
            method="bjacobi" if solver == "bjacobi" else "gasm")
        if not st.converged:
            raise RuntimeError(f"iterative solver failed at {f} Hz")
        spl_ref = mean_spl(x_ref[cab])
        spl_it = mean_spl(x_it[cab])
        err = abs(spl_it - spl_ref) / abs(spl_ref)
        rows.append([f, st.iterations, spl_ref, spl_it, err])
        if err > worst:
            worst, worst_f = err, f
    path = out / f"error_{solver}.csv"
    write_csv(path, ["f_hz", "iterations", "spl_direct_db", "spl_iterative_db",
                     "rel_error"], rows)
    if worst > args.bound:
        raise VerificationFailure(
            f"SPL relative error {worst:.3e} at {worst_f} Hz exceeds "
            f"bound {args.bound}")
    return [path]


def cmd_report(args, config: ModelConfig, out: Path):
    """Aggregate per-method totals from previously written artifacts."""
    rows = []
    for stats_file in sorted(out.glob("stats_*.csv")):
        method = stats_file.stem.split("_", 1)[1]
        with open(stats_file, newline="", encoding="utf-8") as fh:
            stats = list(csv.DictReader(fh))
        timings = out / f"timings_{method}.csv"
        total_time = 0.0
        if timings.exists():
            with open(timings, newline="", encoding="utf-8") as fh:
                for rec in csv.DictReader(fh):
                    total_time += sum(float(v) for k, v in rec.items()
                                      if k.endswith("_s"))
        memory = max((float(r["factor_memory_bytes"]) for r in stats),
                     default=0.0)
        err_file = out / f"error_{method}.csv"
        max_err = ""
        if err_file.exists():
            with open(err_file, newline="", encoding="utf-8") as fh:
                errs = [float(r["rel_error"]) for r in csv.DictReader(fh)]
            max_err = max(errs) if errs else ""
        rows.append([method, total_time, memory, max_err])
    if (out / "timings_mor.csv").exists():
        total = 0.0
        with open(out / "timings_mor.csv", newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                total += float(rec["solve_time_s"])
        max_err = ""
        err_file = out / "error_mor.csv"
        if err_file.exists():
            with open(err_file, newline="", encoding="utf-8") as fh:
                errs = [float(r["rel_error"]) for r in csv.DictReader(fh)]
            max_err = max(errs) if errs else ""
        rows.append(["mor", total, 0.0, max_err])
    if not rows:
        raise ConfigError("no sweep artifacts found to report on")
    path = out / "report.csv"
    write_csv(path, ["method", "total_time_s", "memory_bytes",
                     "max_rel_error"], rows)
    return [path]


def _limit_threads(n: int):
    if n <= 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vibrofem",
        description="Coupled vibroacoustic frequency-domain FE driver")
    parser.add_argument("--config", required=True, help="model config (YAML)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for any randomised fixtures")
    parser.add_argument("--threads", type=int, default=0,
                        help="cap BLAS/OpenMP threads (0 = library default)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("mesh", help="emit the band/level schedule")

    p = sub.add_parser("assemble", help="dump system matrices at one frequency")
    p.add_argument("--frequency", type=float, default=None)

    p = sub.add_parser("sweep", help="full-order frequency sweep")
    p.add_argument("--solver", choices=("direct", "bjacobi", "gasm"),
                   default="direct")
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--no-warm-start", action="store_true")

    p = sub.add_parser("mor", help="reduced-order model pipeline")
    p.add_argument("action", choices=("build", "sweep", "verify"))
    p.add_argument("--stride", type=int, default=5,
                   help="verification-grid stride over unused frequencies")

    p = sub.add_parser("verify", help="iterative solver vs direct reference")
    p.add_argument("--solver", choices=("bjacobi", "gasm"), default="gasm")
    p.add_argument("--overlap", type=int, default=None)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--bound", type=float, default=1e-2)

    sub.add_parser("report", help="aggregate method comparison table")
    return parser


COMMANDS = {
    "mesh": cmd_mesh,
    "assemble": cmd_assemble,
    "sweep": cmd_sweep,
    "mor": cmd_mor,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _limit_threads(args.threads)
    np.random.seed(args.seed)
    t0 = time.perf_counter()
    try:
        config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](args, config, out)
        write_manifest(out, args.command, Path(args.config), config,
                       outputs, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except VerificationFailure as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
