"""Greedy rational-Arnoldi reduction of one frequency band.

Builds a reduced model for the benchmark's middle band on its scheduled
mesh, then sweeps the band with both the full model and the reduced one
and reports accuracy and speedup.  The full pipeline over all bands is
available through the command line: vibrofem --config ... mor build.
"""

import importlib.resources
import time

import numpy as np

from vibrofem.assembly import ModelOperator
from vibrofem.config import frequency_grid, load_config
from vibrofem.meshing import build_schedule
from vibrofem.mor import build_local_roms, fom_from_operator, relative_error
from vibrofem.mortar import build_couplings
from vibrofem.solvers import build_level_meshes, probe_dof_index

cfg_path = importlib.resources.files("vibrofem") / "data" / "fuselage_slice.cfg"
config = load_config(cfg_path)
band = (260.0, 578.0)

schedule = build_schedule(config, config.solver.mesh_levels)
level = schedule.levels[schedule.band_assignment[1]]
meshes = build_level_meshes(config, level)
op = ModelOperator(config, meshes, build_couplings(config, meshes))
probe = probe_dof_index(config, meshes, op.block_map)
fom = fom_from_operator(op, probe)
grid = [f for f in frequency_grid(config.frequency) if band[0] <= f <= band[1]]
print(f"band {band[0]:.0f}-{band[1]:.0f} Hz, {fom.n} DoFs, "
      f"{len(grid)} sweep frequencies")

t0 = time.perf_counter()
roms = build_local_roms(fom, grid, config.mor, band)
t_build = time.perf_counter() - t0
for rom in roms:
    print(f"window {rom.window[0]:.0f}-{rom.window[1]:.0f} Hz: "
          f"r = {rom.r}, {len(rom.expansion_points)} expansion points, "
          f"converged = {rom.converged}")
print(f"build time {t_build:.1f} s\n")

t0 = time.perf_counter()
y_full = np.array([fom.output(fom.solve(f)) for f in grid])
t_full = time.perf_counter() - t0


def rom_for(f):
    return next(r for r in roms if r.contains(f))


t0 = time.perf_counter()
y_red = np.array([rom_for(f).output(f) for f in grid])
t_red = time.perf_counter() - t0

_, eps_max, k, _ = relative_error(y_full, y_red)
print(f"full sweep   {t_full:7.1f} s")
print(f"reduced sweep{t_red:7.1f} s   (speedup {t_full / t_red:.1f}x, "
      f"{t_full / (t_red + t_build):.1f}x including the build)")
print(f"max relative probe error {eps_max:.2e} at {grid[k]:.0f} Hz "
      f"(tolerance {config.mor.tol:.0e})")
