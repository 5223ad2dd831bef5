"""Time-domain detector models: cascade traces, robustness, sideband Rabi."""

from dataclasses import replace

import numpy as np
import pytest

from heraldsim._accel import available_backends
from heraldsim.lindblad import (
    MHZ_TO_RAD_NS,
    CascadedSystemParams,
    GaussianPulse,
    calibrate_sideband_drive,
    cascaded_simulate,
    parameter_robustness,
    pulse_sweep,
    sideband_pi_time,
    sideband_rabi,
)
from heraldsim.qmath import ValidationError


@pytest.fixture(scope="module")
def default_traces():
    params = CascadedSystemParams()
    return {f: cascaded_simulate(f, params, t_total=1500.0) for f in (0, 1, 2)}


class TestCascade:
    def test_dark_counts_small_with_transient(self, default_traces):
        tr = default_traces[0]
        assert tr.p_click < 0.01
        # finite selectivity shows up as a transient rise during the pulse
        assert tr.p_e.max() > 5.0 * tr.p_click

    def test_single_photon_efficiency(self, default_traces):
        # the model's optimum-timing efficiency; about half the incident
        # photons excite the detector cavity and the pulse converts most
        assert 0.45 < default_traces[1].p_click < 0.65

    def test_not_number_resolving(self, default_traces):
        assert abs(default_traces[2].p_click - default_traces[1].p_click) <= 0.02

    def test_cavity_population_peak(self, default_traces):
        # matched-bandwidth transit: max single-photon occupation 4/e^2
        tr = default_traces[1]
        assert abs(tr.n_d.max() - 0.46) < 0.08
        assert abs(tr.times[np.argmax(tr.n_d)] - 354.0) < 40.0

    def test_trace_and_guard_budgets(self, default_traces):
        for tr in default_traces.values():
            assert tr.trace_error < 1e-8
            assert tr.guard_max < 1e-3

    def test_decoupled_emitter(self):
        params = replace(CascadedSystemParams(), kappa_a=0.0)
        with_photon = cascaded_simulate(1, params, t_total=1000.0)
        dark = cascaded_simulate(0, params, t_total=1000.0)
        assert with_photon.n_d.max() < 1e-12
        assert abs(with_photon.p_click - dark.p_click) < 1e-12

    def test_step_halving_convergence(self):
        params = CascadedSystemParams()
        p1 = cascaded_simulate(1, params, t_total=800.0, dt=1.0).p_click
        p2 = cascaded_simulate(1, params, t_total=800.0, dt=0.5).p_click
        assert abs(p1 - p2) < 1e-4

    def test_excitation_non_increasing_without_drive(self):
        pulse = GaussianPulse(amplitude=0.0)
        params = replace(CascadedSystemParams(), pulse=pulse)
        tr = cascaded_simulate(2, params, t_total=1000.0)
        total = tr.n_a + tr.n_d + tr.p_e
        assert np.all(np.diff(total) < 1e-10)

    def test_invalid_fock_rejected(self):
        with pytest.raises(ValidationError):
            cascaded_simulate(5, CascadedSystemParams())

    def test_csv_columns(self, tmp_path, default_traces):
        path = tmp_path / "traces.csv"
        default_traces[1].write_csv(path)
        header = path.read_text().split("\n", 1)[0]
        assert header == "time_ns,n_A,n_D,p_e,pulse"


class TestBackends:
    def test_numpy_and_numba_agree(self):
        backends = available_backends()
        if len(backends) < 2:
            pytest.skip("only one backend available")
        params = CascadedSystemParams()
        results = {}
        from heraldsim import lindblad, _accel

        saved = _accel.propagate
        try:
            for name, kernel in backends.items():
                _accel.propagate = kernel
                lindblad.propagate = kernel
                results[name] = cascaded_simulate(1, params, t_total=600.0).p_e
        finally:
            _accel.propagate = saved
            lindblad.propagate = saved
        names = list(results)
        assert np.max(np.abs(results[names[0]] - results[names[1]])) < 1e-10


class TestRobustness:
    def test_zero_variation_is_exact(self):
        report = parameter_robustness(CascadedSystemParams(), 0.0, t_total=900.0)
        assert report.max_relative_change == 0.0

    def test_twenty_percent_variation_under_ten_percent(self):
        report = parameter_robustness(CascadedSystemParams(), 0.2, t_total=1500.0)
        assert report.max_relative_change < 0.10

    def test_bandwidth_mismatch_degrades_monotonically(self):
        params = CascadedSystemParams()
        etas = []
        for ratio in (1.0, 1.5, 2.0):
            varied = replace(params, kappa_d=params.kappa_d * ratio)
            etas.append(cascaded_simulate(1, varied, t_total=1200.0).p_click)
        assert etas[0] > etas[1] > etas[2]


class TestPulseSweep:
    def test_dark_response_peaks_at_zero_detuning(self):
        values = np.array([-6.0, -3.0, 0.0, 3.0])
        p = pulse_sweep(
            CascadedSystemParams(), "detuning", values, initial_fock=0,
            t_total=1200.0,
        )
        assert np.argmax(p) == 2

    def test_single_photon_elevated_at_shifted_line(self):
        values = np.array([-6.0, -4.5, -3.0, 0.0])
        p1 = pulse_sweep(
            CascadedSystemParams(), "detuning", values, initial_fock=1,
            t_total=1200.0,
        )
        p0 = pulse_sweep(
            CascadedSystemParams(), "detuning", values, initial_fock=0,
            t_total=1200.0,
        )
        at_line = list(values).index(-3.0)
        assert p1[at_line] > 10.0 * p0[at_line]
        assert p1[at_line] > p1[0] and p1[at_line] > p1[1]

    def test_delay_sweep_interior_maximum(self):
        values = np.array([-150.0, 0.0, 115.0, 300.0, 500.0])
        p = pulse_sweep(
            CascadedSystemParams(), "delay", values, initial_fock=1,
            t_total=1500.0,
        )
        imax = int(np.argmax(p))
        assert 0 < imax < len(values) - 1
        # frozen model optimum: pulse center on the population peak
        assert abs(values[imax] - 115.0) <= 50.0

    def test_unknown_axis_rejected(self):
        with pytest.raises(ValidationError):
            pulse_sweep(CascadedSystemParams(), "volume", [0.0])


class TestSidebandRabi:
    def test_initially_everything_in_f0(self):
        drive = calibrate_sideband_drive(0.9)
        tr = sideband_rabi(drive, 0.9, 0.4, np.arange(0.0, 101.0, 2.0))
        assert tr.p_f0[0] == pytest.approx(1.0)
        assert tr.p_click[0] == 0.0

    def test_calibrated_pi_time(self):
        drive = calibrate_sideband_drive(0.9, pi_time=254.0)
        assert abs(sideband_pi_time(drive, 0.9) - 254.0) < 0.5
        times = np.arange(0.0, 501.0, 1.0)
        tr = sideband_rabi(drive, 0.9, 0.4, times)
        assert abs(times[int(np.argmax(tr.p_e1))] - 254.0) < 3.0

    def test_matches_damped_two_level_solution(self):
        # oracle: closed-form no-jump amplitude of the driven decaying level
        drive, kappa = 1.7, 0.9
        times = np.arange(0.0, 601.0, 3.0)
        tr = sideband_rabi(drive, kappa, 1.0, times)
        om = drive * MHZ_TO_RAD_NS
        k = kappa * MHZ_TO_RAD_NS
        w_r = np.sqrt(complex(om**2 - k**2 / 4.0)) / 2.0
        amp = (om / 2.0) * np.exp(-k * times / 4.0) * np.sin(w_r * times) / w_r
        assert np.max(np.abs(tr.p_e1 - np.abs(amp) ** 2)) < 1e-8

    def test_overdamped_monotonic_transfer(self):
        times = np.arange(0.0, 2001.0, 5.0)
        tr = sideband_rabi(0.05, 8.0, 1.0, times)
        assert np.all(np.diff(tr.p_e0) >= -1e-12)
        assert tr.p_e1.max() < 1e-3
        # analytic oracle still holds in the overdamped regime
        om = 0.05 * MHZ_TO_RAD_NS
        k = 8.0 * MHZ_TO_RAD_NS
        w_r = np.sqrt(complex(om**2 - k**2 / 4.0)) / 2.0
        amp = (om / 2.0) * np.exp(-k * times / 4.0) * np.sin(w_r * times) / w_r
        assert np.max(np.abs(tr.p_e1 - np.abs(amp) ** 2)) < 1e-10

    def test_population_conservation(self):
        drive = calibrate_sideband_drive(1.2)
        tr = sideband_rabi(drive, 1.2, 0.4, np.arange(0.0, 801.0, 4.0))
        total = tr.p_f0 + tr.p_e1 + tr.p_e0
        assert np.max(np.abs(total - 1.0)) < 1e-9

    def test_polarization_definition(self):
        drive = calibrate_sideband_drive(0.9)
        tr = sideband_rabi(drive, 0.9, 0.4, np.arange(0.0, 301.0, 3.0))
        assert np.allclose(
            tr.ef_polarization, tr.p_f0 - tr.p_e1 - tr.p_e0, atol=1e-14
        )

    def test_nonuniform_grid_rejected(self):
        with pytest.raises(ValidationError):
            sideband_rabi(1.0, 1.0, 0.5, np.array([0.0, 1.0, 3.0]))
