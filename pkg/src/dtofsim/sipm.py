"""SiPM fired-pixel statistics and trigger SNR, analytic and Monte Carlo.

Analytic model: incident photons are Poisson distributed, spread uniformly
over the array, and each pixel fires when it detects at least one photon
within a dead time.  The expected fired count saturates toward the pixel
count; its variance is binomial in the per-pixel trigger probability.

Monte Carlo model: every pixel is a two-state machine (armed, or dead for
one dead time after firing).  Background and dark arrivals run the array
into a stationary state, a laser pulse is injected, and the trigger SNR is
the baseline-subtracted fired count in the counting period at the pulse
over the standard deviation of per-period fired counts under background
alone.  The counting period is one over the system bandwidth.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import ConfigError, SipmSaturationError
from .physconst import photon_energy

PULSE_SHAPES = ("rectangular", "gaussian")

# fraction of a gaussian pulse's photons inside its full-width-half-max
_GAUSS_FWHM_FRACTION = math.erf(math.sqrt(math.log(2.0)))

# steady-state dark load N_pixel * dcr * dead_time above which the
# occupied-when-pulse-arrives approximation starts to degrade
DARK_LOAD_WARN_THRESHOLD = 1e-2


@dataclass(frozen=True)
class SipmParams:
    """SPAD-array parameters.

    ``pde`` is the composed photon detection efficiency (quantum efficiency
    times avalanche trigger probability times fill factor); the factors are
    not modeled separately.  ``n_pixels`` is a count but may be fractional
    for sensitivity studies; the Monte Carlo rounds it.
    """

    n_pixels: float
    pde: float
    dead_time_s: float
    dark_count_rate_cps: float = 0.0

    def __post_init__(self) -> None:
        if not self.n_pixels >= 1:
            raise ConfigError("n_pixels must be >= 1")
        if not 0.0 < self.pde <= 1.0:
            raise ConfigError("pde must be in (0, 1]")
        if not self.dead_time_s > 0:
            raise ConfigError("dead_time_s must be > 0")
        if self.dark_count_rate_cps < 0:
            raise ConfigError("dark_count_rate_cps must be >= 0")
        dark_load = self.n_pixels * self.dark_count_rate_cps * self.dead_time_s
        if dark_load >= DARK_LOAD_WARN_THRESHOLD:
            warnings.warn(
                f"dark load N*DCR*tau = {dark_load:.3g} is not small; the "
                "static dark-occupancy treatment may be inaccurate",
                stacklevel=2)


@dataclass(frozen=True)
class PhotonCounts:
    """Photon budgets entering the fired-pixel statistics.

    n_b_photon  background photons incident during one dead time
    n_s_photon  signal photons attributed to the pulse: peak power times
                half the pulse FWHM, in photons
    """

    n_b_photon: float
    n_s_photon: float

    def __post_init__(self) -> None:
        if self.n_b_photon < 0 or self.n_s_photon < 0:
            raise ConfigError("photon counts must be >= 0")

    @classmethod
    def from_powers(cls, p_r: float, p_rs: float, pulse_fwhm_s: float,
                    wavelength_m: float, dead_time_s: float) -> "PhotonCounts":
        h_nu = photon_energy(wavelength_m)
        return cls(n_b_photon=p_rs * dead_time_s / h_nu,
                   n_s_photon=p_r * pulse_fwhm_s / (2.0 * h_nu))


@dataclass(frozen=True)
class SipmMcConfig:
    """Time-domain simulation controls.

    ``n_noise_periods`` background-only counting periods per trial feed the
    noise estimate.  Trials draw independent sub-seeds from (seed, trial
    index), so results do not depend on worker count or scheduling.
    """

    n_trials: int = 1000
    time_step_s: float = 1e-10
    pulse_shape: str = "rectangular"
    seed: int = 0
    warmup_s: float = 6e-8
    n_noise_periods: int = 20

    def __post_init__(self) -> None:
        if not self.n_trials >= 1:
            raise ConfigError("n_trials must be >= 1")
        if not self.time_step_s > 0:
            raise ConfigError("time_step_s must be > 0")
        if self.pulse_shape not in PULSE_SHAPES:
            raise ConfigError(f"pulse_shape must be one of {PULSE_SHAPES}")
        if self.warmup_s < 0:
            raise ConfigError("warmup_s must be >= 0")
        if not self.n_noise_periods >= 2:
            raise ConfigError("n_noise_periods must be >= 2")

    @classmethod
    def for_dead_time(cls, dead_time_s: float, seed: int = 0,
                      n_trials: int = 1000) -> "SipmMcConfig":
        return cls(n_trials=n_trials, time_step_s=dead_time_s / 60.0,
                   seed=seed, warmup_s=10.0 * dead_time_s)


def _per_photon_exponent(params: SipmParams) -> float:
    """exp(-pde / n_pixels) - 1, the per-photon log-survival increment."""
    return math.expm1(-params.pde / params.n_pixels)


def fired_count(params: SipmParams, n_photon: float) -> float:
    """Expected number of pixels fired by ``n_photon`` incident photons."""
    if n_photon < 0:
        raise ConfigError("n_photon must be >= 0")
    return params.n_pixels * -math.expm1(n_photon * _per_photon_exponent(params))


def fired_std(params: SipmParams, n_photon: float) -> float:
    """Standard deviation of the fired-pixel count (binomial)."""
    if n_photon < 0:
        raise ConfigError("n_photon must be >= 0")
    survival = math.exp(n_photon * _per_photon_exponent(params))
    return math.sqrt(params.n_pixels * (1.0 - survival) * survival)


def background_occupancy(params: SipmParams, counts: PhotonCounts) -> float:
    """Pixels continuously held fired by the background, per dead time."""
    return fired_count(params, counts.n_b_photon)


def dark_occupancy(params: SipmParams) -> tuple[float, float]:
    """(mean, std) of dark counts per dead time; Poisson, so std = sqrt(mean)."""
    n_d = params.n_pixels * params.dark_count_rate_cps * params.dead_time_s
    return n_d, math.sqrt(n_d)


def signal_fired(params: SipmParams, counts: PhotonCounts,
                 n_b: float, n_d: float) -> float:
    """Pixels fired by the pulse given ``n_b + n_d`` already occupied."""
    available = params.n_pixels - n_b - n_d
    if available < 0:
        raise SipmSaturationError(
            f"background plus dark occupancy {n_b + n_d:.4g} exceeds the "
            f"{params.n_pixels:g}-pixel array")
    return available * -math.expm1(counts.n_s_photon * _per_photon_exponent(params))


def trigger_snr_analytic(params: SipmParams, counts: PhotonCounts) -> float:
    """Fired-count trigger SNR from the closed-form statistics.

    Returns ``inf`` in the noiseless limit (no background, no dark counts)
    with a nonzero signal; sweep outputs flag such rows as ``noiseless``.
    """
    n_b = background_occupancy(params, counts)
    n_d, _ = dark_occupancy(params)
    n_s = signal_fired(params, counts, n_b, n_d)
    variance = (n_b * math.exp(counts.n_b_photon * _per_photon_exponent(params))
                + n_d)
    if n_s == 0.0:
        return 0.0
    if variance == 0.0:
        return math.inf
    return n_s / math.sqrt(variance)


def trigger_snr_approx(params: SipmParams, p_r: float, p_rs: float,
                       pulse_fwhm_s: float, wavelength_m: float) -> float:
    """Photon-budget approximation of the trigger SNR.

    Valid when occupancies are far below the pixel count; then the SNR
    reduces to signal photons over root background photons times the root
    of the detection efficiency.
    """
    if p_r < 0 or p_rs < 0:
        raise ConfigError("optical powers must be >= 0")
    if p_r == 0.0:
        return 0.0
    if p_rs == 0.0:
        return math.inf
    h_nu = photon_energy(wavelength_m)
    return (p_r * pulse_fwhm_s / (2.0 * math.sqrt(h_nu * p_rs * params.dead_time_s))
            * math.sqrt(params.pde))


def _pulse_profile(mc: SipmMcConfig, n_s_photon: float, pulse_fwhm_s: float,
                   period_steps: int) -> tuple[np.ndarray, int]:
    """Expected incident signal photons per step over the pulse span.

    Returns ``(profile, window_start)``; the counting period is the
    ``period_steps`` entries starting at ``window_start`` and is aligned so
    the pulse FWHM sits inside it (rectangular: flush at the window start;
    gaussian: peak at the window center).
    """
    dt = mc.time_step_s
    if mc.pulse_shape == "rectangular":
        # flat envelope carrying the attributed photon budget over one FWHM
        pulse_steps = max(1, round(pulse_fwhm_s / dt))
        span = max(period_steps, pulse_steps)
        profile = np.zeros(span)
        profile[:pulse_steps] = n_s_photon / pulse_steps
        return profile, 0
    # gaussian with the FWHM-window photon budget, truncated at 4 sigma
    sigma = pulse_fwhm_s / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    half_span = max(period_steps // 2 + 1, math.ceil(4.0 * sigma / dt))
    span = 2 * half_span
    center = half_span * dt
    edges = np.arange(span + 1) * dt
    cdf = 0.5 * (1.0 + erf((edges - center) / (sigma * math.sqrt(2.0))))
    profile = np.diff(cdf) * (n_s_photon / _GAUSS_FWHM_FRACTION)
    return profile, half_span - period_steps // 2


def _run_trial(rng: np.random.Generator, n_pix: int, dead_steps: int,
               p_bg: float, warm_steps: int, n_noise_periods: int,
               period_steps: int, p_pulse: np.ndarray,
               window_start: int) -> tuple[np.ndarray, float]:
    """One array realization; returns per-period background counts and the
    fired count in the counting period at the pulse."""
    noise_steps = n_noise_periods * period_steps
    pulse_steps = p_pulse.shape[0]
    total = warm_steps + noise_steps + pulse_steps
    uniforms = rng.random((total, n_pix))
    dead = np.zeros(n_pix, dtype=np.int64)
    counts = np.zeros(total, dtype=np.int64)
    for t in range(total):
        armed = dead == 0
        p = p_bg if t < warm_steps + noise_steps \
            else p_pulse[t - warm_steps - noise_steps]
        fired = armed & (uniforms[t] < p)
        counts[t] = int(np.count_nonzero(fired))
        np.subtract(dead, 1, out=dead, where=dead > 0)
        dead[fired] = dead_steps
    noise_counts = counts[warm_steps:warm_steps + noise_steps]
    per_period = noise_counts.reshape(n_noise_periods, period_steps).sum(axis=1)
    window = warm_steps + noise_steps + window_start
    pulse_count = float(counts[window:window + period_steps].sum())
    return per_period, pulse_count


def monte_carlo_snr(params: SipmParams, p_r: float, p_rs: float,
                    pulse_fwhm_s: float, wavelength_m: float,
                    bandwidth_hz: float, mc: SipmMcConfig,
                    workers: int = 1) -> tuple[float, float]:
    """Trigger SNR from the time-domain dead-time simulation.

    Returns ``(snr_estimate, std_error)``.  Deterministic for a fixed seed
    regardless of ``workers``; trial ``i`` always uses the sub-seed
    ``(seed, i)``, so estimates at different operating points share random
    numbers.
    """
    if p_r < 0 or p_rs < 0:
        raise ConfigError("optical powers must be >= 0")
    if not bandwidth_hz > 0:
        raise ConfigError("bandwidth_hz must be > 0")
    if mc.time_step_s > params.dead_time_s / 10.0:
        raise ConfigError("time_step_s must be <= dead_time_s / 10")
    if mc.warmup_s < 3.0 * params.dead_time_s:
        raise ConfigError("warmup_s must be >= 3 * dead_time_s")

    dt = mc.time_step_s
    n_pix = int(round(params.n_pixels))
    dead_steps = max(1, round(params.dead_time_s / dt))
    period_steps = max(1, round(1.0 / (bandwidth_hz * dt)))
    warm_steps = round(mc.warmup_s / dt)
    h_nu = photon_energy(wavelength_m)

    # detected-arrival rates per pixel; dark counts bypass the PDE
    rate_bg = p_rs * params.pde / (h_nu * n_pix) + params.dark_count_rate_cps
    p_bg = -math.expm1(-rate_bg * dt)
    counts = PhotonCounts.from_powers(p_r, p_rs, pulse_fwhm_s,
                                      wavelength_m, params.dead_time_s)
    profile, window_start = _pulse_profile(mc, counts.n_s_photon,
                                           pulse_fwhm_s, period_steps)
    p_pulse = -np.expm1(-(rate_bg * dt + profile * params.pde / n_pix))

    def trial(i: int) -> tuple[np.ndarray, float]:
        seq = np.random.SeedSequence(entropy=mc.seed, spawn_key=(i,))
        rng = np.random.Generator(np.random.PCG64(seq))
        return _run_trial(rng, n_pix, dead_steps, p_bg, warm_steps,
                          mc.n_noise_periods, period_steps, p_pulse,
                          window_start)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trial, range(mc.n_trials)))
    else:
        results = [trial(i) for i in range(mc.n_trials)]

    background = np.concatenate([r[0] for r in results]).astype(float)
    pulse_counts = np.array([r[1] for r in results], dtype=float)

    baseline = float(background.mean())
    noise_std = float(background.std(ddof=1))
    if noise_std == 0.0:
        raise SipmSaturationError(
            "background-only fired counts show no fluctuation; the noise "
            "statistic is undefined at this operating point")
    signal = float(pulse_counts.mean()) - baseline
    snr = signal / noise_std

    n_bg = background.size
    se_signal = math.sqrt(pulse_counts.var(ddof=1) / mc.n_trials
                          + noise_std * noise_std / n_bg)
    se_noise = noise_std / math.sqrt(2.0 * (n_bg - 1))
    se_snr = math.sqrt((se_signal / noise_std) ** 2
                       + (snr * se_noise / noise_std) ** 2)
    return snr, se_snr
