"""Equivalent-fluid properties of the benchmark glass wool.

Prints the complex effective density and sound speed over frequency and
shows the two limits that bracket the model: at low frequency viscosity
dominates (large imaginary density), at high frequency the material
behaves like air scaled by the tortuosity.
"""

import numpy as np

from vibrofem import materials as mats

wool = mats.JcaMaterial(phi=0.98, sigma=2.0e4, alpha_inf=1.0,
                        Lambda=1.0e-4, Lambda_prime=2.0e-4, rho_frame=16.0,
                        ambient=mats.AirProperties())

print(f"{'f [Hz]':>8} {'rho_eff [kg/m^3]':>28} {'c_eff [m/s]':>26} "
      f"{'attenuation [dB/m]':>20}")
for f in (50.0, 100.0, 250.0, 500.0, 750.0, 1000.0):
    rho_eff, c_eff = mats.jca_effective(wool, f)
    k = 2.0 * np.pi * f / c_eff
    # e^{+i omega t} convention: Im(k) < 0 for a decaying forward wave
    att_db = -20.0 * np.log10(np.e) * k.imag
    print(f"{f:8.0f} {rho_eff.real:13.3f}{rho_eff.imag:+13.3f}j "
          f"{c_eff.real:12.2f}{c_eff.imag:+12.2f}j {att_db:20.2f}")

print()
print("loss angle of the effective density (viscous drag vs inertia):")
for f in (20.0, 100.0, 500.0, 2000.0):
    rho_eff, _ = mats.jca_effective(wool, f)
    angle = np.degrees(np.arctan2(-rho_eff.imag, rho_eff.real))
    print(f"  f = {f:5.0f} Hz   {angle:5.1f} deg")
print("the angle peaks where viscous drag and inertia are comparable")
