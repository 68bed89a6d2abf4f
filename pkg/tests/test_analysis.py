"""Fitting, scaling laws, and the CPMG spectroscopy estimator."""

import math

import numpy as np
import pytest

from spinprobe.analysis import (
    FitError,
    PowerLawFit,
    SpectroscopyPoint,
    band_slope,
    expected_scaling_exponent,
    expected_stretching_exponent,
    fit_exponential,
    fit_power_law,
    fit_stretched,
    reconstruct_psd,
    spectroscopy_point,
    spectroscopy_scan,
    t2_scaling_exponent,
)
from spinprobe.qubitsim import DecayCurve, chi_ff
from spinprobe.sequences import make_cpmg
from spinprobe.spectra import PowerLawTerm, SpectrumModel, eval_psd

WHITE = SpectrumModel(powerlaws=(), white_floor=350.0, lines=())
PINK = SpectrumModel(powerlaws=(PowerLawTerm(3e7, 1.0),), white_floor=0.0, lines=())


class TestCurveFits:
    def test_exponential_exact_recovery(self):
        t = np.geomspace(1e-5, 5e-3, 12)
        fit = fit_exponential(t, np.exp(-t / 8e-4))
        assert fit.t2 == pytest.approx(8e-4, rel=1e-6)
        assert fit.chi2_reduced < 1e-9

    def test_exponential_weighted(self):
        rng = np.random.default_rng(1)
        t = np.geomspace(1e-5, 5e-3, 20)
        se = np.full(t.size, 0.01)
        w = np.exp(-t / 8e-4) + rng.normal(0, 0.01, t.size)
        fit = fit_exponential(t, w, se)
        assert fit.t2 == pytest.approx(8e-4, rel=0.05)
        assert fit.t2_err > 0

    def test_stretched_exact_recovery(self):
        t = np.geomspace(1e-5, 5e-3, 12)
        fit = fit_stretched(t, np.exp(-((t / 8e-4) ** 1.3)))
        assert fit.t2 == pytest.approx(8e-4, rel=1e-5)
        assert fit.exponent == pytest.approx(1.3, rel=1e-5)

    def test_stretched_respects_bounds(self):
        t = np.geomspace(1e-5, 5e-3, 12)
        fit = fit_stretched(t, np.exp(-((t / 8e-4) ** 1.3)),
                            exponent_bounds=(0.5, 1.0))
        assert fit.exponent <= 1.0 + 1e-9

    def test_too_few_points_raises_with_diagnostics(self):
        with pytest.raises(FitError) as exc:
            fit_exponential([1e-4], [0.5])
        assert exc.value.diagnostics["n_points"] == 1
        with pytest.raises(FitError):
            fit_stretched([1e-4, 2e-4], [0.9, 0.5])

    def test_evaluate_round_trip(self):
        t = np.geomspace(1e-5, 5e-3, 12)
        y = np.exp(-((t / 8e-4) ** 1.3))
        fit = fit_stretched(t, y)
        np.testing.assert_allclose(fit.evaluate(t), y, rtol=1e-4)


class TestPowerLaw:
    def test_exact_slope(self):
        x = np.geomspace(1, 100, 10)
        fit = fit_power_law(x, 5.0 * x**-1.0)
        assert fit.slope == pytest.approx(-1.0, abs=1e-9)
        assert fit.prefactor == pytest.approx(5.0, rel=1e-9)

    def test_flat_data_zero_slope(self):
        x = np.geomspace(1, 100, 10)
        fit = fit_power_law(x, np.full(10, 3.3))
        assert fit.slope == pytest.approx(0.0, abs=1e-9)

    def test_rejects_nonpositive(self):
        with pytest.raises(FitError):
            fit_power_law([1.0, 2.0], [1.0, -1.0])
        with pytest.raises(FitError):
            fit_power_law([3.0], [1.0])

    def test_scaling_exponent_wrapper(self):
        n = np.array([1, 2, 4, 8, 16, 32])
        fit = t2_scaling_exponent(n, 2e-3 * n**0.5)
        assert fit.slope == pytest.approx(0.5, abs=1e-9)
        assert fit.prefactor == pytest.approx(2e-3, rel=1e-9)

    def test_expected_exponents(self):
        assert expected_scaling_exponent(1.0) == pytest.approx(0.5)
        assert expected_scaling_exponent(2.5) == pytest.approx(2.5 / 3.5)
        assert expected_stretching_exponent(1.0) == pytest.approx(2.0)
        assert expected_stretching_exponent(0.0) == pytest.approx(1.0)


class TestSpectroscopyEstimator:
    def _analytic_curve(self, model, f0, counts):
        tau = 1.0 / (2.0 * f0)
        counts = np.asarray(counts)
        times = counts * tau
        w = np.exp(-np.array([chi_ff(model, make_cpmg(int(n), n * tau))
                              for n in counts]))
        return DecayCurve(times=times, w=w, std_err=np.full(counts.size, 1e-4),
                          n_pulses=counts, n_traj=0, label="analytic"), tau

    def test_white_closure(self):
        # S = pi^2 / (4 T2s) inverts exactly on the flat spectrum
        curve, tau = self._analytic_curve(WHITE, 5e3, [2, 4, 8, 16, 32])
        pt = spectroscopy_point(curve, tau)
        assert pt.s_value == pytest.approx(350.0, rel=1e-3)
        assert pt.f_hz == pytest.approx(5e3)

    def test_colored_protocol_bias(self):
        # fixed-wait scans under 1/f noise read a few tens of percent low;
        # the frozen factor pins the protocol, the band guards regressions
        curve, tau = self._analytic_curve(PINK, 5e3, [2, 4, 8, 16, 32])
        pt = spectroscopy_point(curve, tau)
        ratio = pt.s_value / eval_psd(PINK, 5e3)
        assert ratio == pytest.approx(0.8426, abs=0.01)
        assert 0.80 < ratio < 0.90

    def test_out_of_range_flag(self):
        curve, tau = self._analytic_curve(WHITE, 5e3, [2, 4, 8])
        assert spectroscopy_point(curve, tau, t2_hahn=3 * tau).flags
        assert not spectroscopy_point(curve, tau, t2_hahn=100 * tau).flags

    def test_reconstruct_orders_and_propagates(self):
        pts = [SpectroscopyPoint(tau_wait=1 / (2 * f), t2s=1e-3, t2s_err=1e-4,
                                 pulse_counts=(2, 4), flags=())
               for f in (9e3, 1e3, 4e3)]
        pts[1] = SpectroscopyPoint(tau_wait=pts[1].tau_wait, t2s=1e-3,
                                   t2s_err=1e-4, pulse_counts=(2, 4),
                                   flags=("out_of_range:test",))
        est = reconstruct_psd(pts)
        assert list(est.f) == sorted(est.f)
        s = math.pi**2 / (4 * 1e-3)
        np.testing.assert_allclose(est.s, s)
        half = 1.959964 * math.pi**2 / (4 * 1e-3**2) * 1e-4
        np.testing.assert_allclose(est.ci_high - est.s, half, rtol=1e-9)
        assert est.warnings and "1 of 3" in est.warnings[0]
        assert len(est.points_detail) == 3
        assert est.points_detail[0]["f_hz"] == pytest.approx(1e3)

    def test_reconstruct_empty_rejected(self):
        with pytest.raises(ValueError):
            reconstruct_psd([])

    def test_band_slope_on_synthetic_estimate(self):
        f = np.geomspace(1e3, 1e5, 12)
        s = 4e6 * (f / 1e3) ** -1.0
        pts = [SpectroscopyPoint(tau_wait=1 / (2 * ff),
                                 t2s=math.pi**2 / (4 * ss),
                                 t2s_err=1e-9, pulse_counts=(2,), flags=())
               for ff, ss in zip(f, s)]
        fit = band_slope(reconstruct_psd(pts), 1e3, 1e5)
        assert fit.slope == pytest.approx(-1.0, abs=1e-6)
        with pytest.raises(FitError):
            band_slope(reconstruct_psd(pts), 2e5, 3e5)


class TestSpectroscopyScan:
    def test_white_recovery_and_determinism(self):
        grid = [2e3, 8e3, 3e4]
        est = spectroscopy_scan(WHITE, grid, [2, 4, 8], 200, 17)
        np.testing.assert_allclose(est.f, grid)
        np.testing.assert_allclose(est.s, 350.0, rtol=0.25)
        est2 = spectroscopy_scan(WHITE, grid, [2, 4, 8], 200, 17)
        np.testing.assert_array_equal(est.s, est2.s)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            spectroscopy_scan(WHITE, [0.0, 1e3], [2, 4], 50, 0)


class TestCompositeBandStructure:
    # closed-form crossovers of the composite model's terms
    def test_steep_to_pink_crossover(self):
        # 3e13/(2 pi f)^2.5 = 3e7/(2 pi f) at 2 pi f = 1e4
        f_x = 1e4 / (2 * np.pi)
        steep = SpectrumModel(powerlaws=(PowerLawTerm(3e13, 2.5),),
                              white_floor=0.0, lines=())
        assert eval_psd(steep, f_x) == pytest.approx(eval_psd(PINK, f_x), rel=1e-12)
        assert f_x == pytest.approx(1591.5, abs=0.1)

    def test_pink_to_white_crossover(self):
        f_x = 3e7 / (350.0 * 2 * np.pi)
        assert eval_psd(PINK, f_x) == pytest.approx(350.0, rel=1e-12)
        assert f_x == pytest.approx(13642.0, abs=0.5)
