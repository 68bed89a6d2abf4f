"""Spin-qubit dynamics under classical detuning noise.

Two interchangeable coherence engines live here:

* :func:`coherence_mc` draws Gaussian noise trajectories from a spectrum
  model, integrates the toggled phase for each one and averages cos(phi).
* :func:`chi_ff` / :func:`coherence_ff` evaluate the same decay through the
  filter-function quadrature ``chi = cal * 0.5 * int S(f) |Y(2 pi f)|^2 df``.

For Gaussian noise the two agree exactly in expectation, which the test
suite leans on heavily.

Calibration convention
----------------------
With the raw physical normalization (``calibration=1``) white noise of
density S0 gives chi = S0*T/4 and hence T2 = 4/S0.  The package instead
adopts the spectroscopy convention in which a decay time maps to a spectral
density through ``S = pi^2 / (4*T2)``; closing that loop requires scaling
chi by ``PSD_CHI_CALIBRATION = 16/pi^2``.  The constant is applied in the
coherence engines only; :mod:`spinprobe.spectra` stays strictly physical
(trace variance equals the PSD integral).  Pass ``calibration=1.0`` to
recover the uncalibrated physics, e.g. when comparing against closed-form
results for injected tones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import physical_constants

from . import spectra
from ._rng import derive_rng
from .sequences import PulseSchedule, filter_function
from .spectra import SpectrumModel, NoiseTrace

__all__ = [
    "PSD_CHI_CALIBRATION",
    "BOHR_HZ_PER_T",
    "QubitParams",
    "ReadoutModel",
    "CoherencePoint",
    "DecayCurve",
    "resonance_frequency_hz",
    "rabi_p_up",
    "rabi_chevron",
    "accumulate_phase",
    "coherence_mc",
    "coherence_replay",
    "chi_ff",
    "coherence_ff",
    "decay_vs_time",
    "decay_vs_pulses",
]

# Closes the round trip between simulated decay times and the S = pi^2/(4*T2)
# spectroscopy convention; see the module docstring.
PSD_CHI_CALIBRATION = 16.0 / math.pi**2

BOHR_HZ_PER_T = physical_constants["Bohr magneton in Hz/T"][0]


@dataclass(frozen=True)
class QubitParams:
    """Static qubit properties: Zeeman splitting and drive strength."""

    g_factor: float = 1.9789
    field_t: float = 1.4
    rabi_hz: float = 390625.0

    def __post_init__(self):
        if self.field_t <= 0 or self.g_factor <= 0:
            raise ValueError("g_factor and field_t must be > 0")
        if self.rabi_hz <= 0:
            raise ValueError("rabi_hz must be > 0")

    @property
    def resonance_hz(self) -> float:
        return resonance_frequency_hz(self.g_factor, self.field_t)

    @property
    def pi_time_s(self) -> float:
        return 0.5 / self.rabi_hz


def resonance_frequency_hz(g_factor: float, field_t: float) -> float:
    """Electron spin resonance frequency g * mu_B * B / h."""
    return g_factor * BOHR_HZ_PER_T * field_t


@dataclass(frozen=True)
class ReadoutModel:
    """Affine map from ideal spin-up probability to observed probability.

    ``p_obs = floor + visibility * p_ideal``.  The default is an ideal
    readout; hardware-like configurations shrink the contrast.
    """

    visibility: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if not 0 < self.visibility <= 1:
            raise ValueError(f"visibility must be in (0, 1], got {self.visibility}")
        if self.floor < 0 or self.floor + self.visibility > 1:
            raise ValueError("readout range must stay inside [0, 1]")

    def apply(self, p_ideal):
        return self.floor + self.visibility * np.asarray(p_ideal, dtype=float)

    def invert(self, p_obs):
        return (np.asarray(p_obs, dtype=float) - self.floor) / self.visibility

    def sample(self, p_ideal, shots: int, rng: np.random.Generator):
        """Empirical probability from ``shots`` binary outcomes."""
        p = np.clip(self.apply(p_ideal), 0.0, 1.0)
        return rng.binomial(shots, p) / shots


def rabi_p_up(rabi_hz, detuning_hz, duration_s):
    """Spin-up probability for a resonant square drive (rotating frame).

    ``P = Omega^2/(Omega^2 + Delta^2) * sin^2(pi * sqrt(Omega^2 + Delta^2) * t)``
    with all frequencies in Hz.
    """
    om2 = np.asarray(rabi_hz, dtype=float) ** 2
    gen2 = om2 + np.asarray(detuning_hz, dtype=float) ** 2
    return om2 / gen2 * np.sin(math.pi * np.sqrt(gen2) * np.asarray(duration_s)) ** 2


def rabi_chevron(qubit: QubitParams, detunings_hz, durations_s) -> np.ndarray:
    """P_up on a (detuning, duration) grid: shape (len(detunings), len(durations))."""
    d = np.asarray(detunings_hz, dtype=float)[:, None]
    t = np.asarray(durations_s, dtype=float)[None, :]
    return rabi_p_up(qubit.rabi_hz, d, t)


# ---------------------------------------------------------------------------
# Monte Carlo engine


@dataclass(frozen=True)
class CoherencePoint:
    """Decay estimate W = <cos phi> at one schedule."""

    w: float
    std_err: float
    n_traj: int

    @property
    def chi(self) -> float:
        return -math.log(self.w) if self.w > 0 else math.nan

    @property
    def chi_std_err(self) -> float:
        return self.std_err / self.w if self.w > 0 else math.nan


@dataclass(frozen=True)
class DecayCurve:
    """Coherence versus total evolution time (n_pulses may vary per point)."""

    times: np.ndarray
    w: np.ndarray
    std_err: np.ndarray
    n_pulses: np.ndarray
    n_traj: int
    label: str = ""

    def __post_init__(self):
        for name in ("times", "w", "std_err"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "n_pulses",
                           np.broadcast_to(np.asarray(self.n_pulses, dtype=int),
                                           self.times.shape).copy())
        if not (self.times.shape == self.w.shape == self.std_err.shape):
            raise ValueError("decay curve arrays must be congruent")

    @property
    def chi(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.w > 0, -np.log(np.maximum(self.w, 1e-300)), np.nan)

    @property
    def chi_std_err(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.w > 0, self.std_err / self.w, np.nan)


def _boundary_weights(schedule: PulseSchedule, sample_rate: float, n: int):
    """Indices and fractions to read the running phase integral at segment
    edges, plus per-edge signed weights implementing the toggled sum."""
    edges = schedule.boundaries
    pos = edges * sample_rate
    idx = np.clip(pos.astype(int), 0, n - 2)
    frac = pos - idx
    signs = schedule.segment_signs
    # phi = sum_j s_j * (C(e_{j+1}) - C(e_j)) regrouped per edge
    w_edge = np.zeros(edges.size)
    w_edge[1:] += signs
    w_edge[:-1] -= signs
    return idx, frac, w_edge


def _phases_from_batch(traces: np.ndarray, sample_rate: float,
                       idx: np.ndarray, frac: np.ndarray,
                       w_edge: np.ndarray) -> np.ndarray:
    """Toggled phase integral for each row of a (B, n) sample block.

    The running integral C(t) of the detuning is piecewise linear between
    samples (trapezoid rule), so linear interpolation at segment edges is
    exact for the discretized process.
    """
    dt = 1.0 / sample_rate
    c = np.empty_like(traces)
    c[:, 0] = 0.0
    np.cumsum((traces[:, 1:] + traces[:, :-1]) * (0.5 * dt), axis=1, out=c[:, 1:])
    c_at = c[:, idx] * (1.0 - frac) + c[:, idx + 1] * frac
    return c_at @ w_edge


def accumulate_phase(trace: NoiseTrace, schedule: PulseSchedule,
                     t_offset: float = 0.0) -> float:
    """Toggled phase picked up by one schedule riding a given noise trace.

    The schedule window starts at ``t_offset`` into the trace; the window
    must fit inside the record.
    """
    if t_offset < 0 or t_offset + schedule.total_time > trace.duration * (1 + 1e-9):
        raise ValueError("schedule window does not fit inside the trace")
    rate = trace.sample_rate
    i0 = int(round(t_offset * rate))
    need = min(int(math.ceil(schedule.total_time * rate)) + 2,
               trace.n_samples - i0)
    block = trace.samples[i0:i0 + need][None, :]
    idx, frac, w_edge = _boundary_weights(schedule, rate, block.shape[1])
    return float(_phases_from_batch(block, rate, idx, frac, w_edge)[0])


def _mc_grid(schedule: PulseSchedule, duration_factor: float,
             samples_per_interval: int) -> tuple[float, int]:
    """Sample rate and trace length covering the schedule's band."""
    if duration_factor < 1.0:
        raise ValueError("duration_factor must be >= 1 so the trace covers the schedule")
    intervals = max(schedule.n_pulses, 1)
    rate = samples_per_interval * intervals / schedule.total_time
    # +1 keeps the readout boundary on the sampled part of the record even
    # when duration_factor is exactly 1
    n = int(round(duration_factor * schedule.total_time * rate)) + 1
    if n < 64:
        rate *= 64.0 / n
        n = 64
    return rate, n


def coherence_mc(model: SpectrumModel, schedule: PulseSchedule,
                 n_traj: int, seed: int, *,
                 calibration: float = PSD_CHI_CALIBRATION,
                 duration_factor: float = 2.0,
                 samples_per_interval: int = 16,
                 max_batch: int = 512) -> CoherencePoint:
    """Monte Carlo decay estimate W = <cos phi> over noise realizations.

    Trajectory i draws its trace from ``derive_rng(seed, i)``, so results
    are bit-identical however the work is batched or distributed.  The
    trace band is [1/(duration_factor*T), samples_per_interval*N/(2T)];
    spectral weight outside it is not seen by this estimator.

    Parameters
    ----------
    calibration : float
        Scale applied to the phase variance; the default closes the
        S = pi^2/(4*T2) loop.  Phases are multiplied by sqrt(calibration).
    """
    if n_traj < 2:
        raise ValueError("need at least 2 trajectories for a standard error")
    rate, n = _mc_grid(schedule, duration_factor, samples_per_interval)
    s_bins = spectra.rfft_bin_density(model, rate, n)
    idx, frac, w_edge = _boundary_weights(schedule, rate, n)
    scale = math.sqrt(calibration)
    total = 0.0
    total2 = 0.0
    done = 0
    while done < n_traj:
        b = min(max_batch, n_traj - done)
        block = np.empty((b, n))
        for row in range(b):
            rng = derive_rng(seed, done + row)
            block[row] = spectra.draw_trace_samples(s_bins, rate, n, rng)
        cos_phi = np.cos(scale * _phases_from_batch(block, rate, idx, frac, w_edge))
        total += float(cos_phi.sum())
        total2 += float((cos_phi**2).sum())
        done += b
    w = total / n_traj
    var = max(total2 - n_traj * w * w, 0.0) / (n_traj - 1)
    return CoherencePoint(w=w, std_err=math.sqrt(var / n_traj), n_traj=n_traj)


def coherence_replay(trace: NoiseTrace, schedule: PulseSchedule,
                     n_slices: int, seed: int, *,
                     calibration: float = PSD_CHI_CALIBRATION) -> CoherencePoint:
    """Decay estimate by replaying random windows of one long recorded trace.

    Useful when the noise exists as data rather than as a model.  Slices
    overlap for long schedules, so the standard error understates the truth
    when n_slices exceeds duration/total_time.
    """
    span = trace.duration - schedule.total_time
    if span <= 0:
        raise ValueError("trace shorter than the schedule window")
    rng = derive_rng(seed)
    offsets = rng.uniform(0.0, span, size=n_slices)
    scale = math.sqrt(calibration)
    cos_phi = np.array([math.cos(scale * accumulate_phase(trace, schedule, t0))
                        for t0 in offsets])
    return CoherencePoint(w=float(cos_phi.mean()),
                          std_err=float(cos_phi.std(ddof=1) / math.sqrt(n_slices)),
                          n_traj=n_slices)


# ---------------------------------------------------------------------------
# Filter-function engine


def _integration_grid(schedule: PulseSchedule, model: SpectrumModel,
                      f_min: float | None, f_max: float | None) -> np.ndarray:
    t_total = schedule.total_time
    f1 = max(schedule.n_pulses, 1) / (2.0 * t_total)
    f_lo = f_min if f_min is not None else f1 * 1e-9
    f_hi = f_max if f_max is not None else 80.0 * f1
    for line in model.lines:
        if line.width_hz is not None and f_max is None:
            f_hi = max(f_hi, line.center_hz + 12.0 * line.width_hz)
    if not 0 < f_lo < f_hi:
        raise ValueError(f"bad integration band [{f_lo}, {f_hi}]")
    panels = []
    knee = f1 / 4.0
    if f_lo < knee:
        panels.append(np.geomspace(f_lo, knee, 400))
        lin_start = knee
    else:
        lin_start = f_lo
    panels.append(np.arange(lin_start, f_hi, 1.0 / (16.0 * t_total)))
    panels.append([f_hi])
    for line in model.lines:
        if line.width_hz is None:
            continue
        wlo = max(line.center_hz - 8.0 * line.width_hz, f_lo)
        whi = min(line.center_hz + 8.0 * line.width_hz, f_hi)
        if wlo < whi:
            panels.append(np.linspace(wlo, whi, 257))
    grid = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in panels]))
    return grid[(grid >= f_lo) & (grid <= f_hi)]


def _tail_beyond(model: SpectrumModel, schedule: PulseSchedule, f_hi: float) -> float:
    """``int_{f_hi}^{inf} S(f) <|Y|^2>(f) df`` using the averaged envelope.

    Averaged over its fast oscillation the filter falls off as
    ``(4N + 2) / (4 pi^2 f^2)``, which integrates in closed form against
    each smooth model component.  Lorentzian line tails are ~f^-4 out here
    and are dropped.
    """
    env = (4.0 * schedule.n_pulses + 2.0) / (4.0 * math.pi**2)
    tail = model.white_floor * env / f_hi
    for term in model.powerlaws:
        s_at = term.amplitude / (2.0 * math.pi * f_hi) ** term.exponent
        tail += s_at * env / (f_hi * (1.0 + term.exponent))
    return tail


def chi_ff(model: SpectrumModel, schedule: PulseSchedule, *,
           calibration: float = PSD_CHI_CALIBRATION,
           f_min: float | None = None,
           f_max: float | None = None) -> float:
    """Analytic decay exponent ``cal * 0.5 * int S(f)|Y(2 pi f)|^2 df``.

    Without an explicit ``f_min`` the integral starts far below the filter
    passband, which requires it to converge there: exponents >= 3 always
    diverge, and a pulse-free schedule diverges for exponents >= 1.  Give
    a low cutoff (the inverse measurement duration, typically) for those.
    Without an explicit ``f_max`` a closed-form estimate of the high-side
    tail is added; with one, the integral is sharply band-limited, which is
    how a sampled Monte Carlo trace behaves at its Nyquist edge.
    """
    if f_min is None:
        worst = model.max_exponent
        if worst >= 3.0 and any(t.amplitude > 0 and t.exponent >= 3.0
                                for t in model.powerlaws):
            raise ValueError(
                "power-law exponent >= 3 diverges at f -> 0; pass f_min > 0")
        if schedule.n_pulses == 0 and any(t.amplitude > 0 and t.exponent >= 1.0
                                          for t in model.powerlaws):
            raise ValueError(
                "free induction under exponent >= 1 noise diverges at f -> 0; "
                "pass f_min > 0")
    grid = _integration_grid(schedule, model, f_min, f_max)
    s = spectra._smooth_psd(model, grid)
    for line in model.lines:
        if line.width_hz is not None:
            s = s + spectra._lorentzian(grid, line, line.width_hz)
    integral = float(np.trapezoid(s * filter_function(schedule, grid), grid))
    if f_max is None:
        integral += _tail_beyond(model, schedule, float(grid[-1]))
    for line in model.lines:
        if line.width_hz is None:  # resolution-limited: treat as delta
            integral += line.power * filter_function(schedule, line.center_hz)
    return calibration * 0.5 * integral


def coherence_ff(model: SpectrumModel, schedule: PulseSchedule, *,
                 calibration: float = PSD_CHI_CALIBRATION,
                 f_min: float | None = None,
                 f_max: float | None = None) -> float:
    """exp(-chi) for Gaussian noise; companion of :func:`coherence_mc`."""
    return math.exp(-chi_ff(model, schedule, calibration=calibration,
                            f_min=f_min, f_max=f_max))


# ---------------------------------------------------------------------------
# Scans


def _schedule_for(n_pulses: int, total_time: float) -> PulseSchedule:
    from .sequences import make_cpmg, make_ramsey
    if n_pulses == 0:
        return make_ramsey(total_time)
    return make_cpmg(n_pulses, total_time)


def _decay_point(args) -> CoherencePoint:
    (model_dict, n_pulses, t_total, n_traj, point_seed, calibration,
     duration_factor, samples_per_interval) = args
    model = SpectrumModel.from_dict(model_dict)
    schedule = _schedule_for(n_pulses, t_total)
    return coherence_mc(model, schedule, n_traj, point_seed,
                        calibration=calibration,
                        duration_factor=duration_factor,
                        samples_per_interval=samples_per_interval)


def _run_decay_points(model: SpectrumModel, pulse_counts, times, n_traj: int,
                      seed: int, calibration: float, duration_factor: float,
                      samples_per_interval: int, label: str) -> DecayCurve:
    from ._parallel import pmap
    from ._rng import derive_child_seed
    times = np.asarray(times, dtype=float)
    pulse_counts = np.broadcast_to(np.asarray(pulse_counts, dtype=int), times.shape)
    model_dict = model.to_dict()
    jobs = [(model_dict, int(n), float(t), n_traj,
             derive_child_seed(seed, i), calibration,
             duration_factor, samples_per_interval)
            for i, (n, t) in enumerate(zip(pulse_counts, times))]
    points = pmap(_decay_point, jobs)
    return DecayCurve(times=times,
                      w=np.array([p.w for p in points]),
                      std_err=np.array([p.std_err for p in points]),
                      n_pulses=pulse_counts,
                      n_traj=n_traj, label=label)


def decay_vs_time(model: SpectrumModel, n_pulses: int, times, n_traj: int,
                  seed: int, *, calibration: float = PSD_CHI_CALIBRATION,
                  duration_factor: float = 2.0,
                  samples_per_interval: int = 16,
                  label: str = "") -> DecayCurve:
    """Coherence decay at fixed pulse count over a grid of total times."""
    if not label:
        label = {0: "ramsey", 1: "hahn"}.get(n_pulses, f"cpmg-{n_pulses}")
    return _run_decay_points(model, n_pulses, times, n_traj, seed,
                             calibration, duration_factor,
                             samples_per_interval, label)


def decay_vs_pulses(model: SpectrumModel, tau_wait: float, pulse_counts,
                    n_traj: int, seed: int, *,
                    calibration: float = PSD_CHI_CALIBRATION,
                    duration_factor: float = 2.0,
                    samples_per_interval: int = 16) -> DecayCurve:
    """Coherence decay at fixed inter-pulse wait over a grid of pulse counts.

    This is the spectroscopy drive: with tau_wait pinned, every point
    filters the same frequency ``1/(2*tau_wait)`` and the decay versus
    total time N*tau_wait is exponential with rate proportional to the
    spectral density there.
    """
    counts = np.asarray(pulse_counts, dtype=int)
    if np.any(counts < 1):
        raise ValueError("pulse counts must be >= 1 when tau_wait is fixed")
    times = counts * float(tau_wait)
    return _run_decay_points(model, counts, times, n_traj, seed,
                             calibration, duration_factor,
                             samples_per_interval,
                             label=f"tau_w={tau_wait:.3e}s")
