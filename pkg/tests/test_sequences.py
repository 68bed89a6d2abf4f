"""Pulse schedules and filter functions against closed-form anchors."""

import numpy as np
import pytest

from spinprobe.sequences import (
    PulseSchedule,
    SCHEDULE_HEADER,
    export_schedule,
    filter_function,
    import_schedule,
    make_cpmg,
    make_hahn,
    make_ramsey,
    response,
    toggling_sign,
)

T = 1e-3


class TestConstruction:
    def test_cpmg_pulse_positions(self):
        # pulse j at (2j - 1) T / (2 N)
        sch = make_cpmg(5, T)
        expected = [(2 * j - 1) * T / 10.0 for j in range(1, 6)]
        assert sch.pulse_times == pytest.approx(expected, abs=0.0)
        assert sch.n_pulses == 5

    def test_ramsey_has_no_pulses(self):
        sch = make_ramsey(T)
        assert sch.pulse_times == ()
        assert sch.n_pulses == 0

    def test_hahn_pulse_at_midpoint(self):
        assert make_hahn(T).pulse_times == (T / 2.0,)

    def test_cpmg_one_equals_hahn(self):
        assert make_cpmg(1, T).pulse_times == make_hahn(T).pulse_times

    def test_segment_signs_alternate(self):
        np.testing.assert_array_equal(make_cpmg(3, T).segment_signs,
                                      [1.0, -1.0, 1.0, -1.0])

    def test_boundaries_include_endpoints(self):
        b = make_cpmg(2, T).boundaries
        np.testing.assert_allclose(b, [0.0, T / 4, 3 * T / 4, T])

    def test_rejects_nonpositive_duration(self):
        with pytest.raises(ValueError):
            PulseSchedule(total_time=0.0)
        with pytest.raises(ValueError):
            PulseSchedule(total_time=-1e-3)

    def test_rejects_pulses_outside_window(self):
        with pytest.raises(ValueError):
            PulseSchedule(total_time=T, pulse_times=(0.0,))
        with pytest.raises(ValueError):
            PulseSchedule(total_time=T, pulse_times=(T,))
        with pytest.raises(ValueError):
            PulseSchedule(total_time=T, pulse_times=(1.5 * T,))

    def test_rejects_unsorted_pulses(self):
        with pytest.raises(ValueError):
            PulseSchedule(total_time=T, pulse_times=(0.6 * T, 0.3 * T))
        with pytest.raises(ValueError):
            PulseSchedule(total_time=T, pulse_times=(0.3 * T, 0.3 * T))

    def test_cpmg_rejects_zero_pulses(self):
        with pytest.raises(ValueError):
            make_cpmg(0, T)


class TestToggling:
    def test_sign_starts_positive_and_flips(self):
        sch = make_cpmg(2, T)  # pulses at T/4, 3T/4
        t = np.array([0.0, 0.1 * T, 0.26 * T, 0.5 * T, 0.76 * T, 0.99 * T])
        np.testing.assert_array_equal(toggling_sign(sch, t),
                                      [1, 1, -1, -1, 1, 1])

    def test_ramsey_sign_constant(self):
        sch = make_ramsey(T)
        np.testing.assert_array_equal(
            toggling_sign(sch, np.linspace(0, T, 7)), np.ones(7))


class TestResponse:
    def test_dc_value_is_signed_area(self):
        assert response(make_ramsey(T), 0.0) == pytest.approx(T)
        assert response(make_hahn(T), 0.0) == pytest.approx(0.0, abs=1e-18)
        assert response(make_cpmg(4, T), 0.0) == pytest.approx(0.0, abs=1e-18)
        # asymmetric single pulse: +T/4 then -3T/4
        lop = PulseSchedule(total_time=T, pulse_times=(T / 4,))
        assert response(lop, 0.0) == pytest.approx(-T / 2)

    def test_scalar_and_array_forms(self):
        sch = make_cpmg(2, T)
        y = response(sch, 1e3)
        assert isinstance(y, complex)
        arr = response(sch, np.array([1e3, 2e3]))
        assert arr.shape == (2,)
        assert arr[0] == pytest.approx(y)
        assert isinstance(filter_function(sch, 1e3), float)

    def test_filter_is_squared_magnitude(self):
        sch = make_cpmg(8, T)
        f = np.geomspace(50.0, 2e5, 300)
        np.testing.assert_allclose(filter_function(sch, f),
                                   np.abs(response(sch, f)) ** 2,
                                   rtol=1e-12)

    def test_ramsey_sinc_form(self):
        # |Y| = T sinc(f T) for free induction
        f = np.array([100.0, 850.0, 3.3e3])
        np.testing.assert_allclose(np.abs(response(make_ramsey(T), f)),
                                   np.abs(T * np.sinc(f * T)), rtol=1e-12)


class TestPassband:
    @pytest.mark.parametrize("n", [1, 2, 4, 8, 16, 32])
    def test_peak_response_magnitude(self, n):
        # |Y| = 2T/pi at the passband centre f1 = N / (2T)
        f1 = n / (2.0 * T)
        assert abs(response(make_cpmg(n, T), f1)) == pytest.approx(
            2.0 * T / np.pi, rel=1e-12)

    @pytest.mark.parametrize("n,ratio", [
        (1, 1.48404), (2, 1.14783), (4, 1.04128),
        (8, 1.01070), (16, 1.00270), (32, 1.00068)])
    def test_true_maximum_location(self, n, ratio):
        # the actual argmax sits slightly above f1, converging as N grows
        sch = make_cpmg(n, T)
        f1 = n / (2.0 * T)
        f = np.linspace(0.5 * f1, 2.0 * f1, 60001)
        fmax = f[np.argmax(filter_function(sch, f))]
        assert fmax / f1 == pytest.approx(ratio, rel=1e-3)

    @pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
    def test_even_harmonics_null_for_even_n(self, n):
        sch = make_cpmg(n, T)
        f1 = n / (2.0 * T)
        peak = filter_function(sch, f1)
        for k in (1, 2, 3):
            assert filter_function(sch, 2 * k * f1) / peak < 1e-24

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_even_harmonics_for_odd_n(self, n):
        # |Y(2k f1)|^2 / |Y(f1)|^2 = 1/(kN)^2 for odd kN, 0 for even kN
        sch = make_cpmg(n, T)
        f1 = n / (2.0 * T)
        peak = filter_function(sch, f1)
        for k in (1, 2, 3):
            r = filter_function(sch, 2 * k * f1) / peak
            if (k * n) % 2:
                assert r == pytest.approx(1.0 / (k * n) ** 2, rel=1e-9)
            else:
                assert r < 1e-24


class TestParseval:
    @pytest.mark.parametrize("n", [1, 8])
    def test_total_filter_power(self, n):
        # int_0^inf |Y|^2 df = T/2; tail beyond F averages (4N+2)/(4 pi^2 f^2)
        sch = make_cpmg(n, T)
        f1 = n / (2.0 * T)
        cap = 4000.0 * f1
        f = np.linspace(1e-2, cap, 2_000_001)
        integral = np.trapezoid(filter_function(sch, f), f)
        integral += (4 * n + 2) / (4 * np.pi ** 2 * cap)
        assert integral == pytest.approx(T / 2.0, rel=1e-9)


class TestCsv:
    def test_round_trip(self, tmp_path):
        sch = make_cpmg(6, 3.7e-4)
        p = tmp_path / "sched.csv"
        export_schedule(sch, p)
        assert p.read_text().splitlines()[0] == SCHEDULE_HEADER
        back = import_schedule(p)
        assert back.total_time == sch.total_time
        assert back.pulse_times == sch.pulse_times

    def test_index_zero_row_carries_total_time(self, tmp_path):
        p = tmp_path / "sched.csv"
        export_schedule(make_hahn(2e-4), p)
        rows = [l.split(",") for l in p.read_text().splitlines()[1:]]
        zero = [t for i, t in rows if int(i) == 0]
        assert len(zero) == 1 and float(zero[0]) == 2e-4

    def test_rejects_missing_readout_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text(SCHEDULE_HEADER + "\n1,0.0001\n")
        with pytest.raises(ValueError):
            import_schedule(p)

    def test_rejects_foreign_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            import_schedule(p)
