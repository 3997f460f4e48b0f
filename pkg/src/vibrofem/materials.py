"""Frequency-dependent material laws.

All models use the e^{+i omega t} time convention.  Under this convention
hysteretic damping enters as a complex stiffness K*(1 + i*eta) and a
dissipative medium has Im(k) < 0 for the wavenumber k = omega/c, so that
plane waves e^{-i k x} decay in +x.  The closed-form expressions for the
porous equivalent fluid are written out in docs/formulas.md and locked by
the golden-value fixtures in tests/.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence


@dataclass(frozen=True)
class AirProperties:
    """Ambient air used inside the porous model."""

    rho0: float = 1.204        # kg/m^3
    c0: float = 343.0          # m/s
    eta_visc: float = 1.81e-5  # Pa s
    Pr: float = 0.71
    gamma: float = 1.4
    P0: float = 101325.0       # Pa


@dataclass(frozen=True)
class ElasticMaterial:
    E: float
    nu: float
    rho: float
    thickness: float
    prestress: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError("E must be positive")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError("nu must lie in [0, 0.5)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.thickness <= 0:
            raise ValueError("thickness must be positive")


@dataclass(frozen=True)
class AcousticMaterial:
    c: float
    rho: float

    def __post_init__(self):
        if self.c <= 0 or self.rho <= 0:
            raise ValueError("c and rho must be positive")


@dataclass(frozen=True)
class JcaMaterial:
    """Five-parameter porous equivalent fluid with a limp-frame density."""

    phi: float           # porosity (0, 1]
    sigma: float         # static flow resistivity, Pa s/m^2
    alpha_inf: float     # tortuosity >= 1
    Lambda: float        # viscous characteristic length, m
    Lambda_prime: float  # thermal characteristic length, m
    rho_frame: float     # bulk frame density, kg/m^3
    ambient: AirProperties = field(default_factory=AirProperties)

    def __post_init__(self):
        if not 0.0 < self.phi <= 1.0:
            raise ValueError("phi must lie in (0, 1]")
        for name in ("sigma", "Lambda", "Lambda_prime", "rho_frame"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.alpha_inf < 1.0:
            raise ValueError("alpha_inf must be >= 1")
        if self.Lambda > self.Lambda_prime:
            raise ValueError("Lambda must not exceed Lambda_prime")


@dataclass(frozen=True)
class LossFactorTable:
    """Piecewise-linear loss factor samples, clamped outside the range."""

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("need at least one sample")
        freqs = [f for f, _ in self.samples]
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("sample frequencies must be strictly ascending")
        if any(eta < 0 for _, eta in self.samples):
            raise ValueError("loss factors must be non-negative")

    def eta(self, f: float) -> float:
        fs = [x for x, _ in self.samples]
        es = [e for _, e in self.samples]
        if f <= fs[0]:
            return es[0]
        if f >= fs[-1]:
            return es[-1]
        for (f0, e0), (f1, e1) in zip(self.samples, self.samples[1:]):
            if f0 <= f <= f1:
                return e0 + (e1 - e0) * (f - f0) / (f1 - f0)
        raise AssertionError("unreachable")


def rigid_density(mat: JcaMaterial, f: float) -> complex:
    """Dynamic density of the rigid-frame porous model (pore-scale).

    rho(w) = a_inf rho0 [1 + sigma phi/(i w rho0 a_inf)
                         sqrt(1 + 4 i a_inf^2 eta rho0 w / (sigma^2 L^2 phi^2))]
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    a = mat.ambient
    w = 2.0 * math.pi * f
    visc = cmath.sqrt(
        1.0
        + 4j * mat.alpha_inf**2 * a.eta_visc * a.rho0 * w
        / (mat.sigma**2 * mat.Lambda**2 * mat.phi**2)
    )
    return a.rho0 * mat.alpha_inf * (
        1.0 + mat.sigma * mat.phi / (1j * w * a.rho0 * mat.alpha_inf) * visc
    )


def dynamic_bulk_modulus(mat: JcaMaterial, f: float) -> complex:
    """Dynamic bulk modulus of the saturating air (pore-scale).

    K(w) = gamma P0 / (gamma - (gamma - 1) /
           [1 + 8 eta/(i L'^2 Pr w rho0) sqrt(1 + i rho0 w Pr L'^2/(16 eta))])
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    a = mat.ambient
    w = 2.0 * math.pi * f
    Lp = mat.Lambda_prime
    therm = cmath.sqrt(1.0 + 1j * a.rho0 * w * a.Pr * Lp**2 / (16.0 * a.eta_visc))
    F = 1.0 / (1.0 + 8.0 * a.eta_visc / (1j * Lp**2 * a.Pr * w * a.rho0) * therm)
    return a.gamma * a.P0 / (a.gamma - (a.gamma - 1.0) * F)


def limp_density(mat: JcaMaterial, f: float) -> complex:
    """Limp-frame correction of the rigid-frame dynamic density."""
    a = mat.ambient
    rho_r = rigid_density(mat, f)
    rho_t = mat.rho_frame + mat.phi * a.rho0
    return (rho_t * rho_r - a.rho0**2) / (rho_t + rho_r - 2.0 * a.rho0)


def jca_effective(mat: JcaMaterial, f: float) -> tuple[complex, complex]:
    """Equivalent-fluid density and sound speed (limp frame) at frequency f.

    The pore-scale quantities are mapped to the equivalent fluid by the
    porosity: rho_eff = rho_limp/phi, K_eff = K/phi, c_eff = sqrt(K_eff/rho_eff).
    """
    rho_eff = limp_density(mat, f) / mat.phi
    K_eff = dynamic_bulk_modulus(mat, f) / mat.phi
    c_eff = cmath.sqrt(K_eff / rho_eff)
    if c_eff.real < 0:
        c_eff = -c_eff
    return rho_eff, c_eff


def complex_stiffness_scale(table: LossFactorTable, f: float) -> complex:
    """Hysteretic stiffness scale 1 + i*eta(f)."""
    return 1.0 + 1j * table.eta(f)


def prestress_from_pressurisation(delta_p: float, R: float) -> tuple[float, float]:
    """Membrane pre-tensions of a pressurised closed cylinder of radius R."""
    if delta_p < 0:
        raise ValueError("delta_p must be non-negative")
    if R <= 0:
        raise ValueError("R must be positive")
    return delta_p * R / 2.0, delta_p * R


def wavelength(kind: str, material, f: float) -> float:
    """Smallest relevant wavelength of a domain kind at frequency f.

    Acoustic and equivalent-fluid domains propagate at (the real part of)
    their sound speed.  The elastic desk model uses the thin-plate bending
    wavelength lambda_b = 2 pi / k_b with k_b = (w^2 rho t / D)^(1/4) and
    D = E t^3 / (12 (1 - nu^2)), the shortest structural wave at these
    frequencies.
    """
    if f <= 0:
        raise ValueError("frequency must be positive")
    if kind == "acoustic":
        return material.c / f
    if kind == "equivalent_fluid":
        _, c_eff = jca_effective(material, f)
        return c_eff.real / f
    if kind == "elastic":
        w = 2.0 * math.pi * f
        t = material.thickness
        D = material.E * t**3 / (12.0 * (1.0 - material.nu**2))
        k_b = (w**2 * material.rho * t / D) ** 0.25
        return 2.0 * math.pi / k_b
    raise ValueError(f"unknown domain kind {kind!r}")
