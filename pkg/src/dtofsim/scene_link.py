"""Optical link budget: echo and solar-background power at the photodetector.

The echo model treats the target as a Lambertian reflector larger than the
laser spot, with the receive direction assumed equal to the emit direction.
Background light is in-band solar irradiance reflected by the same target
into the receiver field of view.  All functions here are pure and operate
on immutable value types, so they are safe to call from any thread.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import ConfigError

APERTURE_MODELS = ("constant", "cosine")
ATMOSPHERE_MODES = ("fixed_transmittance", "extinction")
SOLAR_MODES = ("direct_irradiance", "spectrum_integral", "illuminance_scaled")

SPECTRUM_CSV_HEADER = ("wavelength_nm", "irradiance_w_m2_nm", "transmittance")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class SceneGeometry:
    """Geometry of a single ranging direction.

    range_m            distance to the target, m
    incidence_angle_rad  angle between receive direction and target normal
    elevation_angle_rad  receive-direction elevation; argument of the
                         aperture model
    sun_angle_rad        angle between solar direction and target normal
    """

    range_m: float = 100.0
    incidence_angle_rad: float = 0.0
    elevation_angle_rad: float = 0.0
    sun_angle_rad: float = 0.0

    def __post_init__(self) -> None:
        _require(self.range_m > 0, "range_m must be > 0")
        _require(0.0 <= self.incidence_angle_rad < math.pi / 2,
                 "incidence_angle_rad must be in [0, pi/2)")
        _require(abs(self.elevation_angle_rad) < math.pi / 2,
                 "elevation_angle_rad must be in (-pi/2, pi/2)")
        # inclusive upper bound: a grazing sun contributes zero power
        _require(0.0 <= self.sun_angle_rad <= math.pi / 2,
                 "sun_angle_rad must be in [0, pi/2]")


@dataclass(frozen=True)
class AtmosphereModel:
    """One-way atmospheric transmittance, either fixed or Beer-Lambert."""

    mode: str = "fixed_transmittance"
    one_way_transmittance: float = 1.0
    extinction_coeff_per_m: float = 0.0

    def __post_init__(self) -> None:
        _require(self.mode in ATMOSPHERE_MODES,
                 f"atmosphere mode must be one of {ATMOSPHERE_MODES}")
        if self.mode == "fixed_transmittance":
            _require(0.0 < self.one_way_transmittance <= 1.0,
                     "one_way_transmittance must be in (0, 1]")
        else:
            _require(self.extinction_coeff_per_m >= 0.0,
                     "extinction_coeff_per_m must be >= 0")


@dataclass(frozen=True)
class ReceiverOptics:
    """Receive-path optics and efficiencies.

    aperture_radius_m  entrance pupil radius, m
    focal_length_m     receiver focal length, m
    detector_radius_m  radius of the circular photosensitive area, m
    laser_efficiency   optical efficiency for the laser line
    sun_efficiency     optical efficiency for in-band sunlight
    aperture_model     'constant' or 'cosine' falloff of pupil area with
                       the receiving angle
    """

    aperture_radius_m: float
    focal_length_m: float
    detector_radius_m: float
    laser_efficiency: float = 1.0
    sun_efficiency: float = 1.0
    aperture_model: str = "constant"

    def __post_init__(self) -> None:
        _require(self.aperture_radius_m > 0, "aperture_radius_m must be > 0")
        _require(self.focal_length_m > 0, "focal_length_m must be > 0")
        _require(self.detector_radius_m > 0, "detector_radius_m must be > 0")
        _require(0.0 < self.laser_efficiency <= 1.0,
                 "laser_efficiency must be in (0, 1]")
        _require(0.0 < self.sun_efficiency <= 1.0,
                 "sun_efficiency must be in (0, 1]")
        _require(self.aperture_model in APERTURE_MODELS,
                 f"aperture_model must be one of {APERTURE_MODELS}")


@dataclass(frozen=True)
class TargetModel:
    """Lambertian target with diffuse reflectivity."""

    reflectivity: float
    extends_beyond_spot: bool = True

    def __post_init__(self) -> None:
        _require(0.0 <= self.reflectivity <= 1.0,
                 "reflectivity must be in [0, 1]")
        # the link model assumes the target fully contains the laser spot
        _require(self.extends_beyond_spot,
                 "extends_beyond_spot must be true for this link model")


@dataclass(frozen=True)
class LaserParams:
    """Pulsed laser transmitter parameters."""

    peak_power_w: float
    wavelength_m: float
    pulse_fwhm_s: float
    repetition_hz: float = 0.0  # bookkeeping only; does not enter the model

    def __post_init__(self) -> None:
        _require(self.peak_power_w > 0, "peak_power_w must be > 0")
        _require(self.pulse_fwhm_s > 0, "pulse_fwhm_s must be > 0")
        _require(0.3e-6 < self.wavelength_m < 2.0e-6,
                 "wavelength_m must be in (0.3e-6, 2.0e-6)")
        _require(self.repetition_hz >= 0, "repetition_hz must be >= 0")


@dataclass(frozen=True)
class SolarModel:
    """In-band solar irradiance at the scene, W/m^2.

    direct_irradiance   the in-band value is given directly
    spectrum_integral   integrate irradiance times filter transmittance
                        over a tabulated spectrum
    illuminance_scaled  scale a reference (illuminance, irradiance) anchor
                        pair linearly to the requested illuminance
    """

    mode: str = "direct_irradiance"
    in_band_irradiance_w_m2: float = 0.0
    spectrum_table: tuple[tuple[float, float, float], ...] = ()
    illuminance_klux: float = 0.0
    reference_illuminance_klux: float = 100.0
    reference_irradiance_w_m2: float = 29.4

    def __post_init__(self) -> None:
        _require(self.mode in SOLAR_MODES,
                 f"solar mode must be one of {SOLAR_MODES}")
        if self.mode == "direct_irradiance":
            _require(self.in_band_irradiance_w_m2 >= 0,
                     "in_band_irradiance_w_m2 must be >= 0")
        elif self.mode == "illuminance_scaled":
            _require(self.illuminance_klux >= 0,
                     "illuminance_klux must be >= 0")
            _require(self.reference_illuminance_klux > 0,
                     "reference_illuminance_klux must be > 0")
            _require(self.reference_irradiance_w_m2 >= 0,
                     "reference_irradiance_w_m2 must be >= 0")
        else:
            _require(len(self.spectrum_table) >= 2,
                     "spectrum_table needs at least 2 rows")
            last = -math.inf
            for wl, irr, t in self.spectrum_table:
                _require(wl > last,
                         "spectrum_table wavelengths must be strictly increasing")
                _require(irr >= 0, "spectrum irradiance must be >= 0")
                _require(0.0 <= t <= 1.0, "spectrum transmittance must be in [0, 1]")
                last = wl


def load_spectrum_csv(path: str) -> tuple[tuple[float, float, float], ...]:
    """Read a solar spectrum table from CSV.

    Expected header: ``wavelength_nm,irradiance_w_m2_nm,transmittance``,
    rows strictly increasing in wavelength.
    """
    rows: list[tuple[float, float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty spectrum file") from None
        if tuple(h.strip() for h in header) != SPECTRUM_CSV_HEADER:
            raise ConfigError(
                f"{path}: spectrum header must be "
                f"{','.join(SPECTRUM_CSV_HEADER)!r}, got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}:{lineno}: expected 3 columns")
            try:
                rows.append((float(row[0]), float(row[1]), float(row[2])))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: non-numeric value") from None
    if len(rows) < 2:
        raise ConfigError(f"{path}: spectrum table needs at least 2 rows")
    return tuple(rows)


def one_way_transmittance(atm: AtmosphereModel, range_m: float) -> float:
    """One-way atmospheric transmittance over the given path length."""
    _require(range_m > 0, "range_m must be > 0")
    if atm.mode == "fixed_transmittance":
        return atm.one_way_transmittance
    return math.exp(-atm.extinction_coeff_per_m * range_m)


def effective_aperture(optics: ReceiverOptics, theta_r: float) -> float:
    """Effective pupil area at receiving angle ``theta_r``, m^2."""
    _require(abs(theta_r) < math.pi / 2, "theta_r must be in (-pi/2, pi/2)")
    area = math.pi * optics.aperture_radius_m ** 2
    if optics.aperture_model == "cosine":
        area *= math.cos(theta_r)
    return area


def fov_half_angle(optics: ReceiverOptics) -> float:
    """Unilateral field of view of the receiver, rad."""
    return math.atan(optics.detector_radius_m / optics.focal_length_m)


def echo_power(scene: SceneGeometry, atm: AtmosphereModel,
               optics: ReceiverOptics, target: TargetModel,
               laser: LaserParams) -> float:
    """Peak echo power reaching the photodetector, W.

    Lambertian radiant intensity toward the receiver times the pupil solid
    angle, with the round-trip transmittance and the receive-path laser
    efficiency applied.  Falls off as 1/R^2 when the transmittance and
    pupil area do not depend on range.
    """
    tau = one_way_transmittance(atm, scene.range_m)
    area = effective_aperture(optics, scene.elevation_angle_rad)
    return (tau * tau * optics.laser_efficiency * target.reflectivity
            * laser.peak_power_w * area * math.cos(scene.incidence_angle_rad)
            / (math.pi * scene.range_m * scene.range_m))


def sun_equivalent_irradiance(solar: SolarModel) -> float:
    """In-band solar irradiance after the receiver filter stack, W/m^2."""
    if solar.mode == "direct_irradiance":
        return solar.in_band_irradiance_w_m2
    if solar.mode == "illuminance_scaled":
        return (solar.reference_irradiance_w_m2
                * solar.illuminance_klux / solar.reference_illuminance_klux)
    # trapezoidal integration of irradiance * transmittance on the table grid
    total = 0.0
    table = solar.spectrum_table
    for (wl0, e0, t0), (wl1, e1, t1) in zip(table, table[1:]):
        total += 0.5 * (e0 * t0 + e1 * t1) * (wl1 - wl0)
    return total


def background_power(scene: SceneGeometry, atm: AtmosphereModel,
                     optics: ReceiverOptics, target: TargetModel,
                     solar: SolarModel) -> float:
    """Solar background power reaching the photodetector, W.

    The target patch inside the field of view grows as R^2 while the pupil
    solid angle shrinks as 1/R^2, so the result is range independent for a
    fixed atmospheric transmittance.  A single one-way transmittance is
    applied to the background path.
    """
    e_sun = sun_equivalent_irradiance(solar)
    tau = one_way_transmittance(atm, scene.range_m)
    area = effective_aperture(optics, scene.elevation_angle_rad)
    fov_ratio = optics.detector_radius_m / optics.focal_length_m
    return (e_sun * optics.sun_efficiency * tau * target.reflectivity
            * area * fov_ratio * fov_ratio * math.cos(scene.sun_angle_rad))
