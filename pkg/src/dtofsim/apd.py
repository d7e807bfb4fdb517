"""Avalanche-photodiode signal, noise budget, trigger SNR and gain optimum.

Signal is the multiplied photocurrent at the echo peak.  Noise is the RMS
of the no-echo photocurrent: background shot noise, dark-current shot
noise (surface term unmultiplied, bulk term multiplied), Johnson noise of
the load, and a lumped amplifier term, all mutually independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigError
from .physconst import BOLTZMANN, ELEMENTARY_CHARGE, photon_energy

EXCESS_NOISE_MODES = ("power_law", "ionization")

# golden-section settings: coarse scan to bracket, then contract to a
# relative width of GAIN_TOL
GAIN_SCAN_POINTS = 64
GAIN_TOL = 1e-6
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ApdParams:
    """Physical and circuit parameters of a linear-mode APD channel.

    The excess noise factor uses either the power-law form gain**x or the
    exact ionization-rate form; exactly one mode is active.
    """

    gain: float
    quantum_efficiency: float
    wavelength_m: float
    excess_noise_index: float = 0.3
    electron_ionization_rate: float | None = None
    excess_noise_mode: str = "power_law"
    surface_dark_current_a: float = 0.0
    bulk_dark_current_a: float = 0.0
    load_resistance_ohm: float = 1e4
    temperature_k: float = 300.0
    amplifier_noise_a: float = 0.0

    def __post_init__(self) -> None:
        if not self.gain >= 1:
            raise ConfigError("gain must be >= 1")
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ConfigError("quantum_efficiency must be in (0, 1]")
        if not self.wavelength_m > 0:
            raise ConfigError("wavelength_m must be > 0")
        if self.excess_noise_mode not in EXCESS_NOISE_MODES:
            raise ConfigError(
                f"excess_noise_mode must be one of {EXCESS_NOISE_MODES}")
        if self.excess_noise_mode == "power_law":
            if not self.excess_noise_index >= 0:
                raise ConfigError("excess_noise_index must be >= 0")
        else:
            if self.electron_ionization_rate is None:
                raise ConfigError(
                    "ionization mode requires electron_ionization_rate")
            if not 0.0 <= self.electron_ionization_rate <= 1.0:
                raise ConfigError("electron_ionization_rate must be in [0, 1]")
        if self.surface_dark_current_a < 0:
            raise ConfigError("surface_dark_current_a must be >= 0")
        if self.bulk_dark_current_a < 0:
            raise ConfigError("bulk_dark_current_a must be >= 0")
        if not self.load_resistance_ohm > 0:
            raise ConfigError("load_resistance_ohm must be > 0")
        if not self.temperature_k > 0:
            raise ConfigError("temperature_k must be > 0")
        if self.amplifier_noise_a < 0:
            raise ConfigError("amplifier_noise_a must be >= 0")


@dataclass(frozen=True)
class NoiseBudget:
    """RMS noise components, amperes; total is their quadrature sum."""

    sigma_signal_a: float
    sigma_background_a: float
    sigma_dark_a: float
    sigma_thermal_a: float
    sigma_amplifier_a: float
    total_a: float


def responsivity(wavelength_m: float, quantum_efficiency: float) -> float:
    """Unmultiplied responsivity e * eta / (h * nu), A/W."""
    if not 0.0 <= quantum_efficiency <= 1.0:
        raise ConfigError("quantum_efficiency must be in [0, 1]")
    return ELEMENTARY_CHARGE * quantum_efficiency / photon_energy(wavelength_m)


def signal_current(params: ApdParams, p_r: float) -> float:
    """Multiplied photocurrent at echo peak power ``p_r``, A."""
    if p_r < 0:
        raise ConfigError("p_r must be >= 0")
    return responsivity(params.wavelength_m, params.quantum_efficiency) \
        * params.gain * p_r


def excess_noise_factor(params: ApdParams) -> float:
    """Multiplicative shot-noise penalty of the stochastic avalanche gain."""
    m = params.gain
    if params.excess_noise_mode == "power_law":
        return m ** params.excess_noise_index
    k_e = params.electron_ionization_rate
    return k_e * m + (1.0 - k_e) * (2.0 - 1.0 / m)


def noise_sigma(params: ApdParams, p_rs: float, p_r: float,
                bandwidth_hz: float) -> NoiseBudget:
    """Noise budget for given background and echo powers, amperes RMS.

    Pass ``p_r = 0`` to obtain the no-echo noise that defines the trigger
    SNR denominator.
    """
    if p_rs < 0 or p_r < 0:
        raise ConfigError("optical powers must be >= 0")
    if not bandwidth_hz > 0:
        raise ConfigError("bandwidth_hz must be > 0")
    k_pd = responsivity(params.wavelength_m, params.quantum_efficiency)
    m2f = params.gain * params.gain * excess_noise_factor(params)
    two_e_bw = 2.0 * ELEMENTARY_CHARGE * bandwidth_hz
    var_signal = two_e_bw * k_pd * p_r * m2f
    var_background = two_e_bw * k_pd * p_rs * m2f
    var_dark = (two_e_bw * params.surface_dark_current_a
                + two_e_bw * params.bulk_dark_current_a * m2f)
    var_thermal = (4.0 * BOLTZMANN * params.temperature_k * bandwidth_hz
                   / params.load_resistance_ohm)
    var_amp = params.amplifier_noise_a * params.amplifier_noise_a
    total = math.sqrt(var_signal + var_background + var_dark
                      + var_thermal + var_amp)
    return NoiseBudget(
        sigma_signal_a=math.sqrt(var_signal),
        sigma_background_a=math.sqrt(var_background),
        sigma_dark_a=math.sqrt(var_dark),
        sigma_thermal_a=math.sqrt(var_thermal),
        sigma_amplifier_a=params.amplifier_noise_a,
        total_a=total,
    )


def trigger_snr(params: ApdParams, p_r: float, p_rs: float,
                bandwidth_hz: float) -> float:
    """Peak signal current over the no-echo noise RMS."""
    sigma = noise_sigma(params, p_rs, 0.0, bandwidth_hz).total_a
    i_s = signal_current(params, p_r)
    if i_s == 0.0:
        return 0.0
    return i_s / sigma


def optimize_gain(params: ApdParams, p_rs: float, bandwidth_hz: float,
                  gain_bounds: tuple[float, float] = (1.0, 1000.0),
                  p_r: float = 1.0) -> tuple[float, float]:
    """Gain that maximizes the trigger SNR, and the SNR there.

    The SNR is linear in ``p_r``, so the argmax does not depend on it; the
    returned SNR is evaluated at the given ``p_r``.  A coarse log-spaced
    scan brackets the global optimum before the golden-section contraction.
    """
    lo, hi = gain_bounds
    if not (lo >= 1.0 and lo < hi):
        raise ConfigError("gain_bounds must satisfy 1 <= lo < hi")

    def snr_at(gain: float) -> float:
        return trigger_snr(replace(params, gain=gain), p_r, p_rs, bandwidth_hz)

    scan = [lo * (hi / lo) ** (i / (GAIN_SCAN_POINTS - 1))
            for i in range(GAIN_SCAN_POINTS)]
    values = [snr_at(g) for g in scan]
    best = max(range(GAIN_SCAN_POINTS), key=values.__getitem__)
    a = scan[max(best - 1, 0)]
    b = scan[min(best + 1, GAIN_SCAN_POINTS - 1)]

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = snr_at(c), snr_at(d)
    while (b - a) > GAIN_TOL * max(1.0, 0.5 * (a + b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = snr_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = snr_at(d)
    gain_star = 0.5 * (a + b)
    gain_star = min(max(gain_star, gain_bounds[0]), gain_bounds[1])
    return gain_star, snr_at(gain_star)
