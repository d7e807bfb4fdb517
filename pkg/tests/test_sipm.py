import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtofsim import ConfigError, SipmSaturationError
from dtofsim.physconst import photon_energy
from dtofsim.sipm import (PhotonCounts, SipmMcConfig, SipmParams,
                          background_occupancy, dark_occupancy, fired_count,
                          fired_std, monte_carlo_snr, signal_fired,
                          trigger_snr_analytic, trigger_snr_approx)

from oracles import sipm_firing_mc

TABLE1_SIPM = SipmParams(n_pixels=400, pde=0.22, dead_time_s=6e-9,
                         dark_count_rate_cps=2007.0)
# reference operating point at 100 m, frozen from the link equations
P_R_REF = 1.946430675e-07
P_RS_REF = 2.5099212581122908e-08
H_NU = photon_energy(905e-9)
COUNTS_REF = PhotonCounts.from_powers(P_R_REF, P_RS_REF, 6e-9, 905e-9, 6e-9)


def photons(n_s: float) -> float:
    """Echo peak power that corresponds to n_s signal photons."""
    return n_s * 2.0 * H_NU / 6e-9


class TestFiredCount:
    def test_no_photons(self):
        assert fired_count(TABLE1_SIPM, 0.0) == 0.0

    def test_reference_point(self):
        # frozen 50-digit evaluation; cross-checked by simulation below
        assert fired_count(TABLE1_SIPM, 100.0) == pytest.approx(
            21.40021558983778, rel=1e-12)

    def test_saturates_at_pixel_count(self):
        assert fired_count(TABLE1_SIPM, 1e9) == pytest.approx(400.0, rel=1e-9)
        assert fired_count(TABLE1_SIPM, 1e9) <= 400.0
        assert fired_count(TABLE1_SIPM, 1e4) < 400.0

    def test_against_firing_simulation(self):
        mc = sipm_firing_mc(400, 0.22, 100.0, trials=200_000, seed=42)
        assert abs(fired_count(TABLE1_SIPM, 100.0) - mc["mean"]) \
            < 3 * mc["se_mean"]
        assert abs(fired_std(TABLE1_SIPM, 100.0) ** 2 - mc["var"]) \
            < 3 * mc["se_var"]

    @given(st.floats(min_value=0.0, max_value=1e4),
           st.floats(min_value=1.0, max_value=1e4))
    def test_monotone_and_bounded(self, n, dn):
        lo = fired_count(TABLE1_SIPM, n)
        hi = fired_count(TABLE1_SIPM, n + dn)
        assert lo <= hi <= TABLE1_SIPM.n_pixels
        assert lo <= min(TABLE1_SIPM.pde * n, TABLE1_SIPM.n_pixels) + 1e-9

    def test_concavity_on_grid(self):
        grid = np.linspace(0.0, 5000.0, 200)
        values = [fired_count(TABLE1_SIPM, n) for n in grid]
        second = np.diff(values, 2)
        assert (second <= 1e-9).all()

    def test_linear_regime(self):
        # below 1% array loading the response is the detected photon count
        for n in (1.0, 5.0, 15.0):
            assert n * TABLE1_SIPM.pde / TABLE1_SIPM.n_pixels < 0.01
            assert fired_count(TABLE1_SIPM, n) == pytest.approx(
                TABLE1_SIPM.pde * n, rel=0.01)


class TestFiredStd:
    def test_no_photons(self):
        assert fired_std(TABLE1_SIPM, 0.0) == 0.0

    def test_reference_point(self):
        assert fired_std(TABLE1_SIPM, 100.0) == pytest.approx(
            4.500588019537996, rel=1e-12)

    def test_saturation_quenches_fluctuation(self):
        assert fired_std(TABLE1_SIPM, 1e9) == pytest.approx(0.0, abs=1e-6)


class TestOccupancies:
    def test_background_occupancy_reference(self):
        assert background_occupancy(TABLE1_SIPM, COUNTS_REF) == pytest.approx(
            125.7014886268859, rel=1e-11)

    def test_background_occupancy_zero(self):
        counts = PhotonCounts(n_b_photon=0.0, n_s_photon=10.0)
        assert background_occupancy(TABLE1_SIPM, counts) == 0.0

    def test_dark_occupancy_reference(self):
        n_d, sigma_d = dark_occupancy(TABLE1_SIPM)
        assert n_d == pytest.approx(0.0048168, rel=1e-12)
        assert sigma_d == pytest.approx(0.06940316995642203, rel=1e-12)

    def test_dark_occupancy_off(self):
        params = replace(TABLE1_SIPM, dark_count_rate_cps=0.0)
        assert dark_occupancy(params) == (0.0, 0.0)

    @given(st.floats(min_value=0.0, max_value=4000.0))
    def test_poisson_identity(self, dcr):
        params = replace(TABLE1_SIPM, dark_count_rate_cps=dcr)
        n_d, sigma_d = dark_occupancy(params)
        assert sigma_d * sigma_d == pytest.approx(n_d, rel=1e-12, abs=1e-300)

    def test_dark_load_warning(self):
        with pytest.warns(UserWarning, match="dark load"):
            SipmParams(n_pixels=400, pde=0.22, dead_time_s=6e-9,
                       dark_count_rate_cps=1e7)


class TestSignalFired:
    def test_no_signal_photons(self):
        counts = PhotonCounts(n_b_photon=100.0, n_s_photon=0.0)
        assert signal_fired(TABLE1_SIPM, counts, 20.0, 0.1) == 0.0

    def test_fully_occupied_array(self):
        assert signal_fired(TABLE1_SIPM, COUNTS_REF, 400.0, 0.0) == 0.0

    def test_overfull_array_raises(self):
        with pytest.raises(SipmSaturationError):
            signal_fired(TABLE1_SIPM, COUNTS_REF, 399.0, 2.0)

    def test_reference_point(self):
        n_b = background_occupancy(TABLE1_SIPM, COUNTS_REF)
        n_d, _ = dark_occupancy(TABLE1_SIPM)
        assert signal_fired(TABLE1_SIPM, COUNTS_REF, n_b, n_d) == \
            pytest.approx(210.76879811566667, rel=1e-11)

    def test_background_shrinks_dynamic_range(self):
        # stronger background strictly reduces the response at fixed signal
        values = []
        for n_bg in (0.0, 100.0, 300.0, 1000.0):
            counts = PhotonCounts(n_b_photon=n_bg, n_s_photon=500.0)
            n_b = background_occupancy(TABLE1_SIPM, counts)
            values.append(signal_fired(TABLE1_SIPM, counts, n_b, 0.0))
        assert all(b < a for a, b in zip(values, values[1:]))


class TestTriggerSnrAnalytic:
    def test_no_signal(self):
        counts = PhotonCounts(n_b_photon=100.0, n_s_photon=0.0)
        assert trigger_snr_analytic(TABLE1_SIPM, counts) == 0.0

    def test_noiseless_limit_sentinel(self):
        params = replace(TABLE1_SIPM, dark_count_rate_cps=0.0)
        counts = PhotonCounts(n_b_photon=0.0, n_s_photon=50.0)
        assert trigger_snr_analytic(params, counts) == math.inf

    def test_reference_point(self):
        assert trigger_snr_analytic(TABLE1_SIPM, COUNTS_REF) == pytest.approx(
            22.70085659073763, rel=1e-11)

    def test_matches_approximation_at_detection_limit(self):
        # low background (1 klux equivalent) so occupancies stay far below
        # the pixel count; compare at the range where the SNR reaches 5
        p_rs = P_RS_REF / 100.0

        def analytic(r):
            counts = PhotonCounts.from_powers(P_R_REF * (100.0 / r) ** 2,
                                              p_rs, 6e-9, 905e-9, 6e-9)
            return trigger_snr_analytic(TABLE1_SIPM, counts)

        lo, hi = 100.0, 5000.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if analytic(mid) >= 5.0:
                lo = mid
            else:
                hi = mid
        r_lim = 0.5 * (lo + hi)
        p_r = P_R_REF * (100.0 / r_lim) ** 2
        approx = trigger_snr_approx(TABLE1_SIPM, p_r, p_rs, 6e-9, 905e-9)
        assert approx == pytest.approx(analytic(r_lim), rel=0.10)

    def test_gap_closes_with_pixel_count(self):
        gaps = []
        for n_pixels in (1e2, 1e4, 1e6):
            params = SipmParams(n_pixels=n_pixels, pde=0.22, dead_time_s=6e-9)
            counts = PhotonCounts(n_b_photon=30.0, n_s_photon=10.0)
            analytic = trigger_snr_analytic(params, counts)
            approx = (counts.n_s_photon / math.sqrt(counts.n_b_photon)
                      * math.sqrt(params.pde))
            gaps.append(abs(approx / analytic - 1.0))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 1e-4


class TestTriggerSnrApprox:
    def test_no_signal(self):
        assert trigger_snr_approx(TABLE1_SIPM, 0.0, P_RS_REF, 6e-9, 905e-9) == 0.0

    def test_reference_point(self):
        assert trigger_snr_approx(TABLE1_SIPM, P_R_REF, P_RS_REF, 6e-9,
                                  905e-9) == pytest.approx(
            47.63780970058583, rel=1e-12)

    def test_inverse_root_background(self):
        base = trigger_snr_approx(TABLE1_SIPM, P_R_REF, P_RS_REF, 6e-9, 905e-9)
        quad = trigger_snr_approx(TABLE1_SIPM, P_R_REF, 4 * P_RS_REF, 6e-9,
                                  905e-9)
        assert quad == pytest.approx(base / 2.0, rel=1e-12)

    def test_dark_scene_sentinel(self):
        assert trigger_snr_approx(TABLE1_SIPM, P_R_REF, 0.0, 6e-9,
                                  905e-9) == math.inf


class TestMonteCarlo:
    BW = 1.0 / 6e-9  # counting period equal to the dead time

    def quick_mc(self, seed=7, n_trials=60):
        return SipmMcConfig(n_trials=n_trials, time_step_s=1e-10, seed=seed,
                            warmup_s=6e-8, n_noise_periods=20)

    def test_deterministic_for_fixed_seed(self):
        mc = self.quick_mc()
        args = (TABLE1_SIPM, photons(50.0), P_RS_REF / 100, 6e-9, 905e-9,
                self.BW, mc)
        assert monte_carlo_snr(*args) == monte_carlo_snr(*args)

    def test_worker_count_does_not_change_results(self):
        mc = self.quick_mc()
        args = (TABLE1_SIPM, photons(50.0), P_RS_REF / 100, 6e-9, 905e-9,
                self.BW, mc)
        assert monte_carlo_snr(*args) == monte_carlo_snr(*args, workers=4)

    def test_seed_changes_results(self):
        args = (TABLE1_SIPM, photons(50.0), P_RS_REF / 100, 6e-9, 905e-9,
                self.BW)
        a = monte_carlo_snr(*args, self.quick_mc(seed=1))
        b = monte_carlo_snr(*args, self.quick_mc(seed=2))
        assert a != b

    def test_no_signal_consistent_with_zero(self):
        snr, se = monte_carlo_snr(TABLE1_SIPM, 0.0, P_RS_REF, 6e-9, 905e-9,
                                  self.BW, self.quick_mc(n_trials=100))
        assert abs(snr) < 3 * se

    def test_matches_analytic_in_dilute_regime(self):
        # compact version of the acceptance check (fewer trials)
        p_rs = P_RS_REF / 100.0
        p_r = photons(50.0)
        counts = PhotonCounts.from_powers(p_r, p_rs, 6e-9, 905e-9, 6e-9)
        analytic = trigger_snr_analytic(TABLE1_SIPM, counts)
        snr, se = monte_carlo_snr(TABLE1_SIPM, p_r, p_rs, 6e-9, 905e-9,
                                  self.BW, self.quick_mc(n_trials=150),
                                  workers=4)
        assert abs(snr - analytic) < 3 * se

    def test_gaussian_pulse_shape_runs(self):
        mc = SipmMcConfig(n_trials=40, time_step_s=1e-10, seed=3,
                          warmup_s=6e-8, pulse_shape="gaussian")
        snr, se = monte_carlo_snr(TABLE1_SIPM, photons(50.0), P_RS_REF / 100,
                                  6e-9, 905e-9, self.BW, mc)
        assert snr > 0

    def test_step_size_guard(self):
        mc = SipmMcConfig(n_trials=10, time_step_s=1e-9, seed=0, warmup_s=6e-8)
        with pytest.raises(ConfigError, match="time_step"):
            monte_carlo_snr(TABLE1_SIPM, 0.0, P_RS_REF, 6e-9, 905e-9,
                            self.BW, mc)

    def test_warmup_guard(self):
        mc = SipmMcConfig(n_trials=10, time_step_s=1e-10, seed=0,
                          warmup_s=1e-8)
        with pytest.raises(ConfigError, match="warmup"):
            monte_carlo_snr(TABLE1_SIPM, 0.0, P_RS_REF, 6e-9, 905e-9,
                            self.BW, mc)


class TestParamValidation:
    def test_pde_range(self):
        with pytest.raises(ConfigError, match="pde"):
            SipmParams(n_pixels=400, pde=1.5, dead_time_s=6e-9)

    def test_pixel_count(self):
        with pytest.raises(ConfigError, match="n_pixels"):
            SipmParams(n_pixels=0, pde=0.22, dead_time_s=6e-9)

    def test_negative_photons(self):
        with pytest.raises(ConfigError):
            PhotonCounts(n_b_photon=-1.0, n_s_photon=0.0)
