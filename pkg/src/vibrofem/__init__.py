"""Coupled vibroacoustic finite elements in the frequency domain.

Structured 2D models built from elastic, acoustic and porous
(equivalent-fluid) rectangular domains, coupled across non-conforming
meshes, solved directly or by preconditioned GMRES, and optionally
reduced to small dense models for fast sweeps.
"""

from .assembly import ModelOperator, assemble_global, dump_matrix_market
from .config import (ConfigError, DomainSpec, FrequencyPlan, InterfaceSpec,
                     LoadSpec, ModelConfig, MorSettings, SolverSettings,
                     dump_config, frequency_grid, load_config, parse_config,
                     shared_segment)
from .materials import (AcousticMaterial, AirProperties, ElasticMaterial,
                        JcaMaterial, LossFactorTable, complex_stiffness_scale,
                        dynamic_bulk_modulus, jca_effective, limp_density,
                        prestress_from_pressurisation, rigid_density,
                        wavelength)
from .meshing import (Mesh, MeshSchedule, build_schedule, dof_count,
                      generate_mesh, supports_per_wavelength)
from .mor import (FullOrderModel, ReducedModel, build_local_roms,
                  fom_from_operator, greedy_expand, krylov_block, project,
                  relative_error, rom_sweep, window_plan)
from .mortar import assemble_coupling, build_couplings, detect_interfaces
from .solvers import (DomainGrouping, SolveStats, SweepResult, direct_solve,
                      frequency_sweep, gmres, mean_spl, solve_iterative)

__version__ = "0.1.0"
