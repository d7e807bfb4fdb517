"""Physical constants (2019 SI exact values) and photon arithmetic."""

from scipy import constants as _sc

ELEMENTARY_CHARGE = _sc.e          # C
PLANCK = _sc.h                     # J*s
LIGHT_SPEED = _sc.c                # m/s
BOLTZMANN = _sc.k                  # J/K


def photon_energy(wavelength_m: float) -> float:
    """Energy of one photon at the given vacuum wavelength, joules."""
    return PLANCK * LIGHT_SPEED / wavelength_m
