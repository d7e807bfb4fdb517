"""Design-space sweeps and deterministic CSV/SVG emission.

Four sweep kinds are supported: trigger SNR versus distance, maximum range
versus elevation angle, maximum range versus sunlight illuminance, and the
SiPM fired-count response versus incident photons.  Solver failures at a
grid point are recorded in that row's status and the sweep continues.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import ranging, sipm
from .detectors import DetectorChoice, SipmChoice
from .errors import ConfigError, SolverError
from .scenario import ScenarioConfig

SWEEP_KINDS = ("distance", "elevation", "illuminance", "photon_response")

STATUS_OK = "ok"

# fired-count response curve families: (pde, n_pixels, background photons)
PHOTON_RESPONSE_FAMILIES: tuple[tuple[float, float, float], ...] = (
    (0.10, 100, 0.0),
    (0.22, 100, 0.0),
    (0.40, 100, 0.0),
    (0.70, 100, 0.0),
    (0.22, 400, 0.0),
    (0.22, 1600, 0.0),
    (0.22, 100, 100.0),
    (0.22, 100, 300.0),
    (0.22, 100, 1000.0),
)


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep: kind, grid of the independent variable, detectors.

    Grid units are the output units of the sweep kind: meters, degrees,
    klux, or incident photons.
    """

    kind: str
    grid: tuple[float, ...]
    detectors: tuple[DetectorChoice, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}")
        if len(self.grid) == 0:
            raise ConfigError("sweep grid must not be empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("sweep grid must be strictly increasing")
        if self.kind != "photon_response" and not self.detectors:
            raise ConfigError("sweep needs at least one detector")


def make_grid(lo: float, hi: float, n: int, spacing: str = "linear") -> tuple[float, ...]:
    """Monotone grid with ``n`` points between ``lo`` and ``hi``."""
    if n < 1:
        raise ConfigError("grid size must be >= 1")
    if n == 1:
        return (float(lo),)
    if not lo < hi:
        raise ConfigError("grid requires lo < hi")
    if spacing == "linear":
        return tuple(float(x) for x in np.linspace(lo, hi, n))
    if spacing == "log":
        if lo <= 0:
            raise ConfigError("log grid requires lo > 0")
        return tuple(float(x) for x in np.geomspace(lo, hi, n))
    raise ConfigError("spacing must be 'linear' or 'log'")


@dataclass(frozen=True)
class SweepRow:
    """One (grid point, series) evaluation."""

    x: float
    series: str
    value: float | None
    status: str


@dataclass(frozen=True)
class SweepResult:
    """Long-format sweep output; one row per grid point and series."""

    kind: str
    x_column: str
    series: tuple[str, ...]
    rows: tuple[SweepRow, ...]
    value_prefix: str = ""
    value_suffix: str = ""
    reference_level: float | None = None  # e.g. the trigger threshold


def _distance_point(config: ScenarioConfig, det: DetectorChoice,
                    r: float) -> SweepRow:
    try:
        snr = ranging.snr_at_range(config, det, r)
    except SolverError as exc:
        return SweepRow(r, det.label, None, type(exc).__name__)
    status = STATUS_OK
    if isinstance(det, SipmChoice) and math.isinf(snr):
        status = "noiseless"
    elif isinstance(det, SipmChoice) and det.snr_mode == "analytic":
        if (ranging.sipm_fired_fraction(config, det, r)
                >= ranging.SIPM_SATURATION_FRACTION):
            status = "saturated"
    return SweepRow(r, det.label, snr, status)


def _max_range_point(config: ScenarioConfig, det: DetectorChoice,
                     x: float) -> SweepRow:
    try:
        result = ranging.max_range(config, det, config.tdc)
    except ranging.NoDetectionError:
        return SweepRow(x, det.label, None, "no_detection")
    except ranging.UnboundedRangeError:
        return SweepRow(x, det.label, None, "unbounded")
    except SolverError as exc:
        return SweepRow(x, det.label, None, type(exc).__name__)
    return SweepRow(x, det.label, result.r_max_m, STATUS_OK)


def _photon_response_rows(config: ScenarioConfig,
                          grid: tuple[float, ...]) -> list[SweepRow]:
    rows = []
    for pde, n_pixels, n_bg in PHOTON_RESPONSE_FAMILIES:
        params = sipm.SipmParams(n_pixels=n_pixels, pde=pde,
                                 dead_time_s=6e-9)
        label = f"pde={pde:g},n_pixel={n_pixels:g},n_b_photon={n_bg:g}"
        n_b = sipm.fired_count(params, n_bg)
        for n in grid:
            counts = sipm.PhotonCounts(n_b_photon=n_bg, n_s_photon=n)
            fired = sipm.signal_fired(params, counts, n_b, 0.0)
            rows.append(SweepRow(n, label, fired, STATUS_OK))
    return rows


def run_sweep(config: ScenarioConfig, spec: SweepSpec,
              workers: int = 1) -> SweepResult:
    """Evaluate a sweep; grid points may be evaluated concurrently."""
    if spec.kind == "photon_response":
        rows = _photon_response_rows(config, spec.grid)
        series = tuple(dict.fromkeys(r.series for r in rows))
        return SweepResult(kind=spec.kind, x_column="n_photon", series=series,
                           rows=tuple(rows))

    tasks: list[tuple[ScenarioConfig, DetectorChoice, float]] = []
    for x in spec.grid:
        for det in spec.detectors:
            if spec.kind == "distance":
                tasks.append((config, det, x))
            elif spec.kind == "elevation":
                scene = replace(config.scene,
                                elevation_angle_rad=math.radians(x))
                tasks.append((replace(config, scene=scene), det, x))
            else:  # illuminance
                if config.solar.mode != "illuminance_scaled":
                    raise ConfigError("illuminance sweep requires the "
                                      "illuminance_scaled solar mode")
                solar = replace(config.solar, illuminance_klux=x)
                tasks.append((replace(config, solar=solar), det, x))

    point = _distance_point if spec.kind == "distance" else _max_range_point

    def run(task):
        cfg, det, x = task
        return point(cfg, det, x)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]

    labels = tuple(det.label for det in spec.detectors)
    if spec.kind == "distance":
        return SweepResult(kind=spec.kind, x_column="range_m", series=labels,
                           rows=tuple(rows), value_prefix="snr_",
                           reference_level=config.tdc.tnr)
    x_column = ("elevation_deg" if spec.kind == "elevation"
                else "illuminance_klux")
    return SweepResult(kind=spec.kind, x_column=x_column, series=labels,
                       rows=tuple(rows), value_prefix="rmax_",
                       value_suffix="_m")


def _format_value(value: float | None) -> str:
    return "" if value is None else repr(value)


def csv_header(result: SweepResult) -> str:
    if result.kind == "photon_response":
        return "n_photon,n_fired,curve_label"
    columns = [result.x_column]
    columns += [f"{result.value_prefix}{label}{result.value_suffix}"
                for label in result.series]
    columns.append("status")
    return ",".join(columns)


def csv_lines(result: SweepResult) -> list[str]:
    """Render a sweep as CSV lines, header first; byte deterministic."""
    lines = [csv_header(result)]
    if result.kind == "photon_response":
        for row in result.rows:
            lines.append(f"{_format_value(row.x)},{_format_value(row.value)},"
                         f"{row.series}")
        return lines
    by_x: dict[float, dict[str, SweepRow]] = {}
    order: list[float] = []
    for row in result.rows:
        if row.x not in by_x:
            by_x[row.x] = {}
            order.append(row.x)
        by_x[row.x][row.series] = row
    for x in order:
        cells = [_format_value(x)]
        statuses = []
        for label in result.series:
            row = by_x[x].get(label)
            cells.append(_format_value(row.value if row else None))
            if row is not None and row.status != STATUS_OK:
                statuses.append(f"{label}:{row.status}")
        cells.append(";".join(statuses) if statuses else STATUS_OK)
        lines.append(",".join(cells))
    return lines


def emit_csv(result: SweepResult, path: str) -> None:
    """Write the sweep as CSV."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(csv_lines(result)))
        fh.write("\n")


# --- SVG -------------------------------------------------------------------

_SVG_WIDTH = 800
_SVG_HEIGHT = 560
_MARGIN_LEFT = 80
_MARGIN_RIGHT = 30
_MARGIN_TOP = 40
_MARGIN_BOTTOM = 60
_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22")

# which axes are logarithmic per sweep kind
_LOG_AXES = {
    "distance": (False, True),
    "elevation": (False, False),
    "illuminance": (True, False),
    "photon_response": (True, True),
}


def _axis_ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        ticks = []
        decade = math.floor(math.log10(lo))
        while 10.0 ** decade <= hi * 1.0001:
            value = 10.0 ** decade
            if value >= lo * 0.9999:
                ticks.append(value)
            decade += 1
        return ticks or [lo, hi]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4.0))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def emit_svg(result: SweepResult, path: str) -> None:
    """Write the sweep as a line chart; byte deterministic."""
    points: dict[str, list[tuple[float, float]]] = {s: [] for s in result.series}
    for row in result.rows:
        if row.value is None or not math.isfinite(row.value):
            continue
        points[row.series].append((row.x, row.value))

    log_x, log_y = _LOG_AXES[result.kind]
    xs = [p[0] for series in points.values() for p in series]
    ys = [p[1] for series in points.values() for p in series]
    if result.reference_level is not None:
        ys.append(result.reference_level)
    if not xs:
        xs, ys = [1.0, 10.0], [1.0, 10.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if log_x:
        x_lo = max(x_lo, 1e-300)
    if log_y:
        y_lo = max(y_lo, min((y for y in ys if y > 0), default=1e-3))
    if x_lo == x_hi:
        x_hi = x_lo + 1.0
    if y_lo == y_hi:
        y_hi = y_lo + 1.0

    plot_w = _SVG_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _SVG_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(x: float) -> float:
        if log_x:
            frac = (math.log10(x) - math.log10(x_lo)) \
                / (math.log10(x_hi) - math.log10(x_lo))
        else:
            frac = (x - x_lo) / (x_hi - x_lo)
        return _MARGIN_LEFT + frac * plot_w

    def sy(y: float) -> float:
        if log_y:
            y = max(y, y_lo)
            frac = (math.log10(y) - math.log10(y_lo)) \
                / (math.log10(y_hi) - math.log10(y_lo))
        else:
            frac = (y - y_lo) / (y_hi - y_lo)
        return _MARGIN_TOP + (1.0 - frac) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" '
        f'height="{_SVG_HEIGHT}" viewBox="0 0 {_SVG_WIDTH} {_SVG_HEIGHT}">',
        f'<rect width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
        f'<text x="{_SVG_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{result.kind} sweep</text>',
    ]
    axis_y = _SVG_HEIGHT - _MARGIN_BOTTOM
    parts.append(f'<line x1="{_MARGIN_LEFT}" y1="{axis_y}" '
                 f'x2="{_SVG_WIDTH - _MARGIN_RIGHT}" y2="{axis_y}" '
                 f'stroke="black"/>')
    parts.append(f'<line x1="{_MARGIN_LEFT}" y1="{_MARGIN_TOP}" '
                 f'x2="{_MARGIN_LEFT}" y2="{axis_y}" stroke="black"/>')
    for t in _axis_ticks(x_lo, x_hi, log_x):
        px = sx(t)
        parts.append(f'<line x1="{px:.2f}" y1="{axis_y}" x2="{px:.2f}" '
                     f'y2="{axis_y + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{axis_y + 20}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{t:g}</text>')
    for t in _axis_ticks(y_lo, y_hi, log_y):
        py = sy(t)
        parts.append(f'<line x1="{_MARGIN_LEFT - 5}" y1="{py:.2f}" '
                     f'x2="{_MARGIN_LEFT}" y2="{py:.2f}" stroke="black"/>')
        parts.append(f'<text x="{_MARGIN_LEFT - 8}" y="{py + 4:.2f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{t:g}</text>')
    parts.append(f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" '
                 f'y="{_SVG_HEIGHT - 16}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">'
                 f'{result.x_column}</text>')

    if result.reference_level is not None and y_lo <= result.reference_level <= y_hi:
        py = sy(result.reference_level)
        parts.append(f'<line x1="{_MARGIN_LEFT}" y1="{py:.2f}" '
                     f'x2="{_SVG_WIDTH - _MARGIN_RIGHT}" y2="{py:.2f}" '
                     f'stroke="gray" stroke-dasharray="6,4"/>')

    for i, label in enumerate(result.series):
        series = points[label]
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        if series:
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in series)
            parts.append(f'<polyline points="{coords}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN_TOP + 16 * i
        parts.append(f'<line x1="{_SVG_WIDTH - _MARGIN_RIGHT - 150}" '
                     f'y1="{ly}" x2="{_SVG_WIDTH - _MARGIN_RIGHT - 126}" '
                     f'y2="{ly}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{_SVG_WIDTH - _MARGIN_RIGHT - 120}" '
                     f'y="{ly + 4}" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
