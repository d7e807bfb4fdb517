#!/usr/bin/env python3
"""Regenerate the committed example configs and golden sweep outputs.

The goldens are this pipeline's own reference values for the headline
comparisons (SNR vs distance, range vs elevation with a cosine aperture,
range vs illuminance, fired-count response curves); they are regression
anchors, not externally measured truth.  Rerunning this script must be a
no-op unless the model changed.
"""

from __future__ import annotations

import os
import sys
from dataclasses import replace

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from dtofsim.scenario import save_scenario, table1_preset  # noqa: E402
from dtofsim.sweeps import (SweepSpec, emit_csv, emit_svg, make_grid,  # noqa: E402
                            run_sweep)

CONFIG_DIR = os.path.join(ROOT, "configs")
GOLDEN_DIR = os.path.join(ROOT, "goldens")


def build_outputs(config_dir: str, golden_dir: str) -> list[str]:
    os.makedirs(config_dir, exist_ok=True)
    os.makedirs(golden_dir, exist_ok=True)
    written = []

    apd = table1_preset("apd")
    sipm = table1_preset("sipm")
    cosine = {"aperture_model": "cosine"}
    apd_cos = replace(apd, optics=replace(apd.optics, **cosine))
    sipm_cos = replace(sipm, optics=replace(sipm.optics, **cosine))

    for name, config in (("table1_apd", apd), ("table1_sipm", sipm),
                         ("table1_apd_cosine", apd_cos),
                         ("table1_sipm_cosine", sipm_cos)):
        path = os.path.join(config_dir, f"{name}.json")
        save_scenario(config, path)
        written.append(path)

    sweeps = {
        "distance_snr": (apd, SweepSpec(
            kind="distance", grid=make_grid(25.0, 500.0, 96),
            detectors=(apd.detector, sipm.detector))),
        "elevation_rmax": (apd_cos, SweepSpec(
            kind="elevation", grid=make_grid(-60.0, 60.0, 49),
            detectors=(apd_cos.detector, sipm_cos.detector))),
        "illuminance_rmax": (apd, SweepSpec(
            kind="illuminance", grid=make_grid(0.1, 100.0, 50, "log"),
            detectors=(apd.detector, sipm.detector))),
        "sipm_response": (sipm, SweepSpec(
            kind="photon_response", grid=make_grid(1.0, 1e5, 81, "log"))),
    }
    for name, (config, spec) in sweeps.items():
        result = run_sweep(config, spec, workers=4)
        csv_path = os.path.join(golden_dir, f"{name}.csv")
        svg_path = os.path.join(golden_dir, f"{name}.svg")
        emit_csv(result, csv_path)
        emit_svg(result, svg_path)
        written.extend([csv_path, svg_path])
    return written


if __name__ == "__main__":
    for path in build_outputs(CONFIG_DIR, GOLDEN_DIR):
        print(f"wrote {os.path.relpath(path, ROOT)}")
