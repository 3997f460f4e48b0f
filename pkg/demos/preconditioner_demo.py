"""Domain-decomposition preconditioning on the benchmark model.

At one mid-band frequency the coupled system is solved with the sparse
direct reference, GMRES with block Jacobi, and GMRES with the restricted
overlapping Schwarz preconditioner at overlaps 0, 1 and 2.  The table
shows the iteration counts, the factor storage and the cabin-SPL error
against the direct reference.
"""

import importlib.resources
import time

import numpy as np

from vibrofem.assembly import ModelOperator
from vibrofem.config import load_config
from vibrofem.meshing import build_schedule
from vibrofem.mortar import build_couplings
from vibrofem.solvers import (DomainGrouping, build_level_meshes,
                              cabin_slice, direct_solve, mean_spl,
                              solve_iterative)

cfg_path = importlib.resources.files("vibrofem") / "data" / "fuselage_slice.cfg"
config = load_config(cfg_path)
f = 450.0

schedule = build_schedule(config, config.solver.mesh_levels)
level = schedule.levels[schedule.band_assignment[config.frequency.band_of(f)]]
meshes = build_level_meshes(config, level)
op = ModelOperator(config, meshes, build_couplings(config, meshes))
A, b = op.operator(f), op.load(f)
cab = cabin_slice(config, op.block_map)
print(f"frequency {f:.0f} Hz, {op.n_dofs} DoFs, "
      f"{len(config.solver.groups)} subdomains\n")

t0 = time.perf_counter()
x_ref, ref = direct_solve(A, b)
t_ref = time.perf_counter() - t0
spl_ref = mean_spl(x_ref[cab])
print(f"{'method':<22} {'its':>4} {'factor MB':>10} {'SPL err':>10} "
      f"{'time [s]':>9}")
print(f"{'direct (reference)':<22} {'-':>4} "
      f"{ref.factor_memory / 1e6:>10.2f} {'-':>10} {t_ref:>9.3f}")

runs = [("block Jacobi", "bjacobi", 0),
        ("Schwarz overlap 0", "gasm", 0),
        ("Schwarz overlap 1", "gasm", 1),
        ("Schwarz overlap 2", "gasm", 2)]
for name, method, overlap in runs:
    grouping = DomainGrouping(
        groups=tuple(tuple(g) for g in config.solver.groups),
        overlap=overlap, variant=config.solver.variant)
    t0 = time.perf_counter()
    x, st = solve_iterative(A, b, grouping, op.block_map,
                            tol_abs=config.solver.tol_abs,
                            max_it=config.solver.max_it, method=method)
    dt = time.perf_counter() - t0
    err = abs(mean_spl(x[cab]) - spl_ref) / abs(spl_ref)
    print(f"{name:<22} {st.iterations:>4} {st.factor_memory / 1e6:>10.2f} "
          f"{err:>10.1e} {dt:>9.3f}")

print("\nthe subdomain factors together stay below the monolithic LU; "
      "overlap pays off most near resonances, where the zero-overlap "
      "iteration counts climb")
