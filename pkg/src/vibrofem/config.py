"""Declarative model description: domains, materials, interfaces, load,
frequency plan and solver/reduction settings.

The on-disk format is a strict YAML key tree (see docs/config_format.md).
Unknown keys are rejected so typos cannot silently disable physics.
Configs are immutable after loading and safe to share between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from .materials import (
    AcousticMaterial,
    AirProperties,
    ElasticMaterial,
    JcaMaterial,
    LossFactorTable,
    prestress_from_pressurisation,
)

PRESSURE_KINDS = ("equivalent_fluid", "acoustic")
DOMAIN_KINDS = ("elastic",) + PRESSURE_KINDS
EDGES = ("N", "S", "E", "W")


class ConfigError(ValueError):
    """Malformed or inconsistent model configuration."""


@dataclass(frozen=True)
class DomainSpec:
    id: str
    kind: str
    rect: tuple[float, float, float, float]  # x0, y0, x1, y1 in metres
    material_id: str
    damping_table_id: str | None = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigError(f"domain {self.id}: unknown kind {self.kind!r}")
        x0, y0, x1, y1 = self.rect
        if x1 <= x0 or y1 <= y0:
            raise ConfigError(f"domain {self.id}: degenerate rectangle")

    @property
    def extent(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect
        return x1 - x0, y1 - y0

    def edge_segment(self, edge: str) -> tuple[tuple[float, float], tuple[float, float]]:
        x0, y0, x1, y1 = self.rect
        return {
            "S": ((x0, y0), (x1, y0)),
            "N": ((x0, y1), (x1, y1)),
            "W": ((x0, y0), (x0, y1)),
            "E": ((x1, y0), (x1, y1)),
        }[edge]


@dataclass(frozen=True)
class InterfaceSpec:
    left: str
    right: str
    coupling: str  # fsi | fixed
    conforming: bool = False

    def __post_init__(self):
        if self.coupling not in ("fsi", "fixed"):
            raise ConfigError(f"interface {self.left}-{self.right}: unknown coupling")


@dataclass(frozen=True)
class FrequencyPlan:
    f_min: float
    f_max: float
    delta_f: float
    band_edges: tuple[float, ...]

    def __post_init__(self):
        if self.f_min <= 0:
            raise ConfigError("f_min must be positive")
        if self.delta_f <= 0:
            raise ConfigError("delta_f must be positive")
        if self.f_max < self.f_min:
            raise ConfigError("f_max must be >= f_min")
        be = self.band_edges
        if len(be) < 2 or be[0] != self.f_min or be[-1] != self.f_max:
            raise ConfigError("band_edges must run from f_min to f_max")
        if any(b <= a for a, b in zip(be, be[1:])):
            raise ConfigError("band_edges must be strictly ascending")

    @property
    def n_points(self) -> int:
        # exact rational count; floats like 0.2 must not lose a grid point
        span = Fraction(str(self.f_max)) - Fraction(str(self.f_min))
        return int(span / Fraction(str(self.delta_f))) + 1

    @property
    def n_bands(self) -> int:
        return len(self.band_edges) - 1

    def band_of(self, f: float) -> int:
        """Band index of f; lower-exclusive/upper-inclusive intervals,
        except the first band which contains f_min."""
        if not self.f_min <= f <= self.f_max:
            raise ConfigError(f"frequency {f} outside plan range")
        for b in range(self.n_bands):
            if f <= self.band_edges[b + 1]:
                return b
        raise AssertionError("unreachable")


def frequency_grid(plan: FrequencyPlan) -> list[float]:
    """Arithmetic progression f_min, f_min + delta_f, ... inside the plan."""
    f0 = Fraction(str(plan.f_min))
    df = Fraction(str(plan.delta_f))
    return [float(f0 + k * df) for k in range(plan.n_points)]


@dataclass(frozen=True)
class LoadSpec:
    kind: str
    target_domain: str
    boundary: str  # N | S | E | W
    amplitude: float  # Pa
    wave_speed: float  # m/s phase speed along the edge
    direction: int = 1

    def __post_init__(self):
        if self.kind != "plane_wave":
            raise ConfigError(f"unknown load kind {self.kind!r}")
        if self.boundary not in EDGES:
            raise ConfigError(f"unknown boundary edge {self.boundary!r}")
        if self.amplitude <= 0:
            raise ConfigError("load amplitude must be positive")
        if self.wave_speed <= 0:
            raise ConfigError("load wave_speed must be positive")
        if self.direction not in (-1, 1):
            raise ConfigError("load direction must be +1 or -1")


@dataclass(frozen=True)
class SolverSettings:
    method: str = "direct"  # direct | bjacobi | gasm
    groups: tuple[tuple[str, ...], ...] = ()
    overlap: int = 1
    variant: str = "restricted"  # restricted | full
    tol_abs: float = 1e-4
    max_it: int = 150
    restart: int = 1000
    warm_start: bool = True
    diagonal_scale: bool = False
    probe_domain: str = ""
    probe_point: tuple[float, float] = (0.0, 0.0)
    mesh_levels: tuple[dict, ...] = ()  # coarse -> fine, {domain id: (hx, hy)}

    def __post_init__(self):
        if self.method not in ("direct", "bjacobi", "gasm"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if self.overlap < 0:
            raise ConfigError("overlap must be non-negative")
        if self.variant not in ("restricted", "full"):
            raise ConfigError("schwarz variant must be restricted or full")


@dataclass(frozen=True)
class MorSettings:
    tol: float = 1e-2
    max_points: int = 20
    moments_per_point: int = 4
    candidate_stride: int = 4
    windows: tuple[tuple[float, float], ...] | str = "auto"

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigError("mor tol must be positive")
        if self.moments_per_point < 1:
            raise ConfigError("moments_per_point must be >= 1")


@dataclass(frozen=True)
class ModelConfig:
    domains: tuple[DomainSpec, ...]
    materials: dict
    damping_tables: dict
    interfaces: tuple[InterfaceSpec, ...]
    load: LoadSpec
    frequency: FrequencyPlan
    solver: SolverSettings = field(default_factory=SolverSettings)
    mor: MorSettings = field(default_factory=MorSettings)

    def domain(self, domain_id: str) -> DomainSpec:
        for d in self.domains:
            if d.id == domain_id:
                return d
        raise ConfigError(f"unknown domain id {domain_id!r}")

    def material_of(self, domain_id: str):
        return self.materials[self.domain(domain_id).material_id]

    def damping_of(self, domain_id: str) -> LossFactorTable | None:
        tid = self.domain(domain_id).damping_table_id
        return self.damping_tables[tid] if tid is not None else None


def shared_segment(rect_a, rect_b, tol: float = 1e-12):
    """Axis-aligned boundary segment shared by two rectangles, or None."""
    ax0, ay0, ax1, ay1 = rect_a
    bx0, by0, bx1, by1 = rect_b
    # vertical contact
    for xa, xb in ((ax1, bx0), (ax0, bx1)):
        if abs(xa - xb) <= tol:
            lo, hi = max(ay0, by0), min(ay1, by1)
            if hi - lo > tol:
                return (xa, lo), (xa, hi)
    # horizontal contact
    for ya, yb in ((ay1, by0), (ay0, by1)):
        if abs(ya - yb) <= tol:
            lo, hi = max(ax0, bx0), min(ax1, bx1)
            if hi - lo > tol:
                return (lo, ya), (hi, ya)
    return None


def _rects_overlap(rect_a, rect_b) -> bool:
    ax0, ay0, ax1, ay1 = rect_a
    bx0, by0, bx1, by1 = rect_b
    return ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1


def _check_keys(mapping: dict, allowed: set[str], where: str):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _num(value) -> float:
    # YAML 1.1 readers take exponents without a sign ("7.0e10") as strings
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}") from None


def _parse_material(entry: dict):
    kind = entry.get("kind")
    if kind == "elastic":
        _check_keys(entry, {"id", "kind", "E", "nu", "rho", "thickness",
                            "prestress", "pressurisation"}, f"material {entry.get('id')}")
        prestress = (0.0, 0.0)
        if "pressurisation" in entry:
            p = entry["pressurisation"]
            _check_keys(p, {"delta_p", "radius"}, "pressurisation")
            prestress = prestress_from_pressurisation(_num(p["delta_p"]),
                                                      _num(p["radius"]))
        elif "prestress" in entry:
            prestress = tuple(_num(v) for v in entry["prestress"])
        return ElasticMaterial(E=_num(entry["E"]), nu=_num(entry["nu"]),
                               rho=_num(entry["rho"]),
                               thickness=_num(entry["thickness"]),
                               prestress=prestress)
    if kind == "acoustic":
        _check_keys(entry, {"id", "kind", "c", "rho"}, f"material {entry.get('id')}")
        return AcousticMaterial(c=_num(entry["c"]), rho=_num(entry["rho"]))
    if kind == "jca":
        _check_keys(entry, {"id", "kind", "phi", "sigma", "alpha_inf", "Lambda",
                            "Lambda_prime", "rho_frame", "ambient"},
                    f"material {entry.get('id')}")
        if "ambient" in entry:
            ambient = AirProperties(**{k: _num(v)
                                       for k, v in entry["ambient"].items()})
        else:
            ambient = AirProperties()
        return JcaMaterial(phi=_num(entry["phi"]), sigma=_num(entry["sigma"]),
                           alpha_inf=_num(entry["alpha_inf"]),
                           Lambda=_num(entry["Lambda"]),
                           Lambda_prime=_num(entry["Lambda_prime"]),
                           rho_frame=_num(entry["rho_frame"]), ambient=ambient)
    raise ConfigError(f"material {entry.get('id')}: unknown kind {kind!r}")


def parse_config(raw: dict) -> ModelConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(raw, {"domains", "materials", "damping_tables", "interfaces",
                      "load", "frequency", "solver", "mor"}, "config")
    for req in ("domains", "materials", "interfaces", "load", "frequency"):
        if req not in raw:
            raise ConfigError(f"missing section {req!r}")

    materials = {}
    for entry in raw["materials"]:
        materials[entry["id"]] = _parse_material(entry)

    damping_tables = {}
    for entry in raw.get("damping_tables", []):
        _check_keys(entry, {"id", "samples"}, "damping_tables")
        damping_tables[entry["id"]] = LossFactorTable(
            samples=tuple((float(f), float(e)) for f, e in entry["samples"]))

    domains = []
    for entry in raw["domains"]:
        _check_keys(entry, {"id", "kind", "rect", "material", "damping_table"},
                    f"domain {entry.get('id')}")
        d = DomainSpec(id=entry["id"], kind=entry["kind"],
                       rect=tuple(float(v) for v in entry["rect"]),
                       material_id=entry["material"],
                       damping_table_id=entry.get("damping_table"))
        if d.material_id not in materials:
            raise ConfigError(f"domain {d.id}: unknown material {d.material_id!r}")
        if d.damping_table_id is not None and d.damping_table_id not in damping_tables:
            raise ConfigError(f"domain {d.id}: unknown damping table")
        mat = materials[d.material_id]
        expected = {"elastic": ElasticMaterial, "acoustic": AcousticMaterial,
                    "equivalent_fluid": JcaMaterial}[d.kind]
        if not isinstance(mat, expected):
            raise ConfigError(f"domain {d.id}: material kind does not match domain kind")
        domains.append(d)
    ids = [d.id for d in domains]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate domain ids")
    for i, a in enumerate(domains):
        for b in domains[i + 1:]:
            if _rects_overlap(a.rect, b.rect):
                raise ConfigError(f"domains overlap: {a.id}, {b.id}")

    by_id = {d.id: d for d in domains}
    interfaces = []
    for entry in raw["interfaces"]:
        _check_keys(entry, {"left", "right", "coupling", "conforming"}, "interface")
        spec = InterfaceSpec(left=entry["left"], right=entry["right"],
                             coupling=entry["coupling"],
                             conforming=bool(entry.get("conforming", False)))
        for side in (spec.left, spec.right):
            if side not in by_id:
                raise ConfigError(f"interface references unknown domain {side!r}")
        kinds = {by_id[spec.left].kind, by_id[spec.right].kind}
        if spec.coupling == "fsi":
            if "elastic" not in kinds or kinds == {"elastic"}:
                raise ConfigError(
                    f"fsi interface {spec.left}-{spec.right} needs one elastic "
                    "and one pressure-field domain")
        else:
            if kinds != {"elastic"}:
                raise ConfigError(
                    f"fixed interface {spec.left}-{spec.right} needs two elastic domains")
        if shared_segment(by_id[spec.left].rect, by_id[spec.right].rect) is None:
            raise ConfigError(f"interface {spec.left}-{spec.right}: "
                              "no shared boundary segment of positive length")
        interfaces.append(spec)

    lraw = raw["load"]
    _check_keys(lraw, {"kind", "target_domain", "boundary", "amplitude",
                       "wave_speed", "direction"}, "load")
    load = LoadSpec(kind=lraw["kind"], target_domain=lraw["target_domain"],
                    boundary=lraw["boundary"], amplitude=_num(lraw["amplitude"]),
                    wave_speed=_num(lraw["wave_speed"]),
                    direction=int(lraw.get("direction", 1)))
    if load.target_domain not in by_id:
        raise ConfigError("load targets unknown domain")
    if by_id[load.target_domain].kind != "elastic":
        raise ConfigError("plane-wave load must target an elastic domain")

    fraw = raw["frequency"]
    _check_keys(fraw, {"f_min", "f_max", "delta_f", "band_edges"}, "frequency")
    plan = FrequencyPlan(
        f_min=_num(fraw["f_min"]), f_max=_num(fraw["f_max"]),
        delta_f=_num(fraw["delta_f"]),
        band_edges=tuple(float(v) for v in fraw.get(
            "band_edges", [fraw["f_min"], fraw["f_max"]])))

    solver = SolverSettings()
    if "solver" in raw:
        sraw = dict(raw["solver"])
        _check_keys(sraw, {"method", "groups", "overlap", "variant", "tol_abs",
                           "max_it", "restart", "warm_start", "diagonal_scale",
                           "probe", "mesh_levels"}, "solver")
        kwargs: dict = {}
        for key in ("method", "variant", "warm_start", "diagonal_scale"):
            if key in sraw:
                kwargs[key] = sraw[key]
        for key in ("overlap", "max_it", "restart"):
            if key in sraw:
                kwargs[key] = int(sraw[key])
        if "tol_abs" in sraw:
            kwargs["tol_abs"] = _num(sraw["tol_abs"])
        if "groups" in sraw:
            kwargs["groups"] = tuple(tuple(g) for g in sraw["groups"])
            if kwargs["groups"]:
                seen: list[str] = []
                for g in kwargs["groups"]:
                    seen.extend(g)
                if sorted(seen) != sorted(ids):
                    raise ConfigError("solver groups must partition the domain ids")
        if "probe" in sraw:
            _check_keys(sraw["probe"], {"domain", "point"}, "solver.probe")
            kwargs["probe_domain"] = sraw["probe"]["domain"]
            kwargs["probe_point"] = tuple(float(v) for v in sraw["probe"]["point"])
        if "mesh_levels" in sraw:
            levels = []
            for lvl in sraw["mesh_levels"]:
                if set(lvl) != set(ids):
                    raise ConfigError("each mesh level must size every domain")
                levels.append({k: tuple(float(h) for h in v) for k, v in lvl.items()})
            kwargs["mesh_levels"] = tuple(levels)
        solver = SolverSettings(**kwargs)

    mor = MorSettings()
    if "mor" in raw:
        mraw = dict(raw["mor"])
        _check_keys(mraw, {"tol", "max_points", "moments_per_point",
                           "candidate_stride", "windows"}, "mor")
        if "windows" in mraw and mraw["windows"] != "auto":
            mraw["windows"] = tuple(tuple(_num(v) for v in w) for w in mraw["windows"])
        if "tol" in mraw:
            mraw["tol"] = _num(mraw["tol"])
        for key in ("max_points", "moments_per_point", "candidate_stride"):
            if key in mraw:
                mraw[key] = int(mraw[key])
        mor = MorSettings(**mraw)

    return ModelConfig(domains=tuple(domains), materials=materials,
                       damping_tables=damping_tables, interfaces=tuple(interfaces),
                       load=load, frequency=plan, solver=solver, mor=mor)


def load_config(path: str | Path) -> ModelConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw)


def dump_config(config: ModelConfig) -> str:
    """Serialise a config back to its file format (round-trip stable)."""
    def mat_entry(mid, mat):
        if isinstance(mat, ElasticMaterial):
            return {"id": mid, "kind": "elastic", "E": mat.E, "nu": mat.nu,
                    "rho": mat.rho, "thickness": mat.thickness,
                    "prestress": list(mat.prestress)}
        if isinstance(mat, AcousticMaterial):
            return {"id": mid, "kind": "acoustic", "c": mat.c, "rho": mat.rho}
        return {"id": mid, "kind": "jca", "phi": mat.phi, "sigma": mat.sigma,
                "alpha_inf": mat.alpha_inf, "Lambda": mat.Lambda,
                "Lambda_prime": mat.Lambda_prime, "rho_frame": mat.rho_frame,
                "ambient": {"rho0": mat.ambient.rho0, "c0": mat.ambient.c0,
                            "eta_visc": mat.ambient.eta_visc, "Pr": mat.ambient.Pr,
                            "gamma": mat.ambient.gamma, "P0": mat.ambient.P0}}

    raw = {
        "domains": [
            {"id": d.id, "kind": d.kind, "rect": list(d.rect),
             "material": d.material_id,
             **({"damping_table": d.damping_table_id}
                if d.damping_table_id is not None else {})}
            for d in config.domains],
        "materials": [mat_entry(mid, m) for mid, m in config.materials.items()],
        "damping_tables": [
            {"id": tid, "samples": [list(s) for s in t.samples]}
            for tid, t in config.damping_tables.items()],
        "interfaces": [
            {"left": i.left, "right": i.right, "coupling": i.coupling,
             "conforming": i.conforming} for i in config.interfaces],
        "load": {"kind": config.load.kind,
                 "target_domain": config.load.target_domain,
                 "boundary": config.load.boundary,
                 "amplitude": config.load.amplitude,
                 "wave_speed": config.load.wave_speed,
                 "direction": config.load.direction},
        "frequency": {"f_min": config.frequency.f_min,
                      "f_max": config.frequency.f_max,
                      "delta_f": config.frequency.delta_f,
                      "band_edges": list(config.frequency.band_edges)},
        "solver": {"method": config.solver.method,
                   "groups": [list(g) for g in config.solver.groups],
                   "overlap": config.solver.overlap,
                   "variant": config.solver.variant,
                   "tol_abs": config.solver.tol_abs,
                   "max_it": config.solver.max_it,
                   "restart": config.solver.restart,
                   "warm_start": config.solver.warm_start,
                   "diagonal_scale": config.solver.diagonal_scale,
                   "probe": {"domain": config.solver.probe_domain,
                             "point": list(config.solver.probe_point)},
                   "mesh_levels": [{k: list(v) for k, v in lvl.items()}
                                   for lvl in config.solver.mesh_levels]},
        "mor": {"tol": config.mor.tol, "max_points": config.mor.max_points,
                "moments_per_point": config.mor.moments_per_point,
                "candidate_stride": config.mor.candidate_stride,
                "windows": ("auto" if config.mor.windows == "auto"
                            else [list(w) for w in config.mor.windows])},
    }
    return yaml.safe_dump(raw, sort_keys=False)
