"""Gate-voltage Stark coupling and the injected-tone verification experiment.

A gate voltage pulls the qubit frequency linearly (the Stark map).  Driving
a gate with a small sinusoidal tone therefore modulates the detuning
deterministically; a CPMG filter tuned near the tone frequency converts
that modulation into extra dephasing.  Scanning wait time against tone
amplitude produces the characteristic response map: a strong dip at the
tone frequency, weaker dips at odd submultiples (where the tone rides an
odd filter harmonic), and nothing at even submultiples where the filter
has exact nulls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spectra
from ._parallel import pmap
from ._rng import derive_child_seed, derive_rng
from .qubitsim import (PSD_CHI_CALIBRATION, ReadoutModel, _boundary_weights,
                       _mc_grid, _phases_from_batch)
from .sequences import filter_function, make_cpmg, response
from .spectra import SpectrumModel

__all__ = [
    "StarkMap",
    "ToneConfig",
    "ToneWave",
    "ToneScanResult",
    "DONOR_REFERENCE",
    "default_stark_map",
    "esr_frequency",
    "fit_stark_map",
    "tone_to_detuning",
    "harmonic_weights",
    "tone_scan",
    "detect_tone_threshold",
    "export_tone_scan",
    "import_tone_scan",
]

TONE_SCAN_HEADER = "f_hz,amplitude_vpp,p_up,std_err"

# Donor-bound electrons in the same material see far weaker gate coupling and
# a correspondingly lower noise floor; kept here as an alternative parameter
# set for side-by-side runs.
DONOR_REFERENCE = {
    "coefficient_hz_per_v": -2.27e6,
    "white_floor_rad2_s": 10.0,
}


@dataclass(frozen=True)
class StarkMap:
    """Linear resonance-frequency map over gate voltages.

    ``f(V) = f0_ref_hz + sum_g coeff_g * (V_g - ref_g)``.
    """

    f0_ref_hz: float
    coefficients_hz_per_v: dict[str, float]
    reference_voltages: dict[str, float] = field(default_factory=dict)
    residual_rms_hz: float = 0.0

    def __post_init__(self):
        for gate, c in self.coefficients_hz_per_v.items():
            if not np.isfinite(c):
                raise ValueError(f"coefficient for gate {gate!r} must be finite")

    def coefficient(self, gate: str) -> float:
        try:
            return self.coefficients_hz_per_v[gate]
        except KeyError:
            raise KeyError(f"gate {gate!r} not in Stark map "
                           f"(has {sorted(self.coefficients_hz_per_v)})") from None


def default_stark_map() -> StarkMap:
    """The two-gate quantum-dot device the bundled configs describe."""
    return StarkMap(f0_ref_hz=38.7765e9,
                    coefficients_hz_per_v={"G1": -36.21e6, "G2": -22.88e6},
                    reference_voltages={"G1": 0.0, "G2": 0.0})


def esr_frequency(stark: StarkMap, delta_v: dict[str, float]) -> float:
    """Resonance frequency at the given per-gate voltage offsets."""
    f = stark.f0_ref_hz
    for gate, dv in delta_v.items():
        f += stark.coefficient(gate) * dv
    return f


def fit_stark_map(voltages: dict[str, np.ndarray], f_hz,
                  reference_voltages: dict[str, float] | None = None) -> StarkMap:
    """Least-squares plane through measured (gate voltages, frequency) points.

    Voltages are per-gate arrays of equal length.  Raises on degenerate
    geometry (e.g. all points along one gate axis), where the plane is
    not identifiable.
    """
    gates = sorted(voltages)
    f = np.asarray(f_hz, dtype=float)
    refs = dict(reference_voltages or {g: 0.0 for g in gates})
    cols = [np.ones_like(f)]
    for g in gates:
        v = np.asarray(voltages[g], dtype=float)
        if v.shape != f.shape:
            raise ValueError(f"gate {g!r} voltage array shape mismatch")
        cols.append(v - refs.get(g, 0.0))
    a = np.vstack(cols).T
    if a.shape[0] < a.shape[1] or np.linalg.matrix_rank(a) < a.shape[1]:
        raise np.linalg.LinAlgError(
            "degenerate voltage grid: plane fit needs spread in every gate")
    beta, res, _, _ = np.linalg.lstsq(a, f, rcond=None)
    resid = f - a @ beta
    rms = float(np.sqrt(np.mean(resid**2)))
    return StarkMap(f0_ref_hz=float(beta[0]),
                    coefficients_hz_per_v={g: float(b) for g, b in zip(gates, beta[1:])},
                    reference_voltages=refs, residual_rms_hz=rms)


@dataclass(frozen=True)
class ToneConfig:
    """Sinusoidal voltage tone on one gate.

    ``phase=None`` means a fresh uniform phase every shot, matching an
    experiment whose tone generator free-runs against the pulse sequence.
    """

    gate: str
    f_tone: float
    amplitude_pp: float
    phase: float | None = None

    def __post_init__(self):
        if self.f_tone <= 0:
            raise ValueError(f"f_tone must be > 0, got {self.f_tone}")
        if self.amplitude_pp < 0:
            raise ValueError(f"amplitude_pp must be >= 0, got {self.amplitude_pp}")


@dataclass(frozen=True)
class ToneWave:
    """Deterministic detuning component induced by a voltage tone."""

    amplitude_rad_s: float
    f_tone: float
    phase: float | None

    def __call__(self, t, phase: float | None = None) -> np.ndarray:
        theta = phase if phase is not None else (self.phase or 0.0)
        t = np.asarray(t, dtype=float)
        return self.amplitude_rad_s * np.sin(2 * math.pi * self.f_tone * t + theta)


def tone_to_detuning(tone: ToneConfig, stark: StarkMap) -> ToneWave:
    """``delta_omega(t) = 2 pi |df/dV| (A_pp/2) sin(2 pi f t + phase)``."""
    amp = 2 * math.pi * abs(stark.coefficient(tone.gate)) * tone.amplitude_pp / 2.0
    return ToneWave(amplitude_rad_s=amp, f_tone=tone.f_tone, phase=tone.phase)


def harmonic_weights(n_pulses: int, f_tone: float, k_max: int = 7) -> list[dict]:
    """Filter weight seen by a tone from scan positions at its submultiples.

    Position k puts the filter fundamental at ``f_tone / k`` (wait time
    ``k / (2 f_tone)``), so the tone rides the k-th harmonic of the
    filter.  Weights are ``|Y(2 pi f_tone)|^2`` normalized to the k = 1
    (fundamental) position; even k collapse to the filter's even-harmonic
    nulls.
    """
    if n_pulses < 1 or f_tone <= 0 or k_max < 1:
        raise ValueError("n_pulses, f_tone and k_max must be positive")
    ref = None
    out = []
    for k in range(1, k_max + 1):
        tau = k / (2.0 * f_tone)
        sched = make_cpmg(n_pulses, n_pulses * tau)
        w = filter_function(sched, f_tone)
        if ref is None:
            ref = w
        out.append({"k": k, "weight": float(w / ref)})
    return out


# ---------------------------------------------------------------------------
# Tone-injection scan


@dataclass(frozen=True)
class ToneScanResult:
    """P_up over (filter frequency, tone amplitude) cells.

    ``p_up`` has shape (n_amplitudes, n_frequencies).  ``cell_info`` holds
    one dict per frequency column: pulse count, nominal and actual total
    time.  ``dropped`` lists wait times excluded because not even one
    pulse fits.
    """

    f_hz: np.ndarray
    amplitudes_vpp: np.ndarray
    p_up: np.ndarray
    std_err: np.ndarray
    shots: int
    cell_info: tuple[dict, ...] = ()
    dropped: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "f_hz", np.asarray(self.f_hz, dtype=float))
        object.__setattr__(self, "amplitudes_vpp",
                           np.asarray(self.amplitudes_vpp, dtype=float))
        for name in ("p_up", "std_err"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        expect = (self.amplitudes_vpp.size, self.f_hz.size)
        if self.p_up.shape != expect or self.std_err.shape != expect:
            raise ValueError(f"p_up/std_err must have shape {expect}")


def _tone_cell(args) -> tuple[float, float]:
    (model_dict, n_pulses, tau, amp_pp, coeff, f_tone, fixed_phase, shots,
     cell_seed, calibration, samples_per_interval, vis, floor) = args
    model = SpectrumModel.from_dict(model_dict)
    schedule = make_cpmg(n_pulses, n_pulses * tau)
    readout = ReadoutModel(visibility=vis, floor=floor)
    rate, n = _mc_grid(schedule, 1.0, samples_per_interval)
    s_bins = spectra.rfft_bin_density(model, rate, n)
    idx, frac, w_edge = _boundary_weights(schedule, rate, n)
    # the tone enters through the exact segment Fourier integral; only its
    # modulus matters once the phase is randomized
    y_mag = abs(response(schedule, f_tone))
    a = 2 * math.pi * abs(coeff) * (amp_pp / 2.0) * y_mag
    scale = math.sqrt(calibration)
    hits = 0
    for shot in range(shots):
        rng = derive_rng(cell_seed, shot)
        trace = spectra.draw_trace_samples(s_bins, rate, n, rng)
        phi_noise = _phases_from_batch(trace[None, :], rate, idx, frac, w_edge)[0]
        theta = rng.uniform(0.0, 2 * math.pi) if fixed_phase is None else fixed_phase
        phi = scale * phi_noise + a * math.sin(theta)
        p = float(readout.apply(0.5 * (1.0 + math.cos(phi))))
        hits += rng.binomial(1, min(max(p, 0.0), 1.0))
    p_hat = hits / shots
    se = math.sqrt(max(p_hat * (1 - p_hat), 0.25 / shots) / shots)
    return p_hat, se


def tone_scan(model: SpectrumModel, tone: ToneConfig, stark: StarkMap,
              tau_grid, total_time: float, amplitudes_vpp, shots: int,
              seed: int, *, readout: ReadoutModel = ReadoutModel(0.55, 0.225),
              calibration: float = PSD_CHI_CALIBRATION,
              samples_per_interval: int = 32) -> ToneScanResult:
    """2D P_up map over (filter frequency, tone amplitude).

    Every cell runs a CPMG sequence with ``N = max(1, round(total_time /
    tau))`` pulses under the background model plus the tone; the actual
    window N*tau is recorded per column since N must be an integer.  Cells
    draw independent trajectories from seeds derived per (column, row),
    so worker count never changes the numbers.
    """
    coeff = stark.coefficient(tone.gate)
    taus = np.asarray(tau_grid, dtype=float)
    amps = np.asarray(amplitudes_vpp, dtype=float)
    keep, dropped, info = [], [], []
    for tau in taus:
        n_pulses = max(1, int(round(total_time / tau)))
        if total_time / tau < 0.5:
            dropped.append(float(tau))
            continue
        keep.append((float(tau), n_pulses))
        info.append({"tau_wait": float(tau), "n_pulses": n_pulses,
                     "f_hz": 1.0 / (2 * tau),
                     "actual_total_time": n_pulses * float(tau)})
    jobs = []
    model_dict = model.to_dict()
    for col, (tau, n_pulses) in enumerate(keep):
        for row, amp in enumerate(amps):
            jobs.append((model_dict, n_pulses, tau, float(amp), coeff,
                         tone.f_tone, tone.phase, shots,
                         derive_child_seed(seed, col, row), calibration,
                         samples_per_interval, readout.visibility, readout.floor))
    results = pmap(_tone_cell, jobs)
    n_f, n_a = len(keep), amps.size
    p = np.empty((n_a, n_f))
    se = np.empty((n_a, n_f))
    for j, (p_hat, err) in enumerate(results):
        col, row = divmod(j, n_a)
        p[row, col] = p_hat
        se[row, col] = err
    return ToneScanResult(f_hz=np.array([1.0 / (2 * t) for t, _ in keep]),
                          amplitudes_vpp=amps, p_up=p, std_err=se, shots=shots,
                          cell_info=tuple(info), dropped=tuple(dropped))


def detect_tone_threshold(result: ToneScanResult, f_tone: float,
                          n_sigma: float = 3.0) -> dict:
    """Smallest amplitude at which the tone column separates from the rest.

    Detection at one amplitude row: the tone-column P_up sits below the
    median of the other columns by at least ``n_sigma`` pooled standard
    errors (median standard error scaled by the usual 1.2533/sqrt(K)
    efficiency factor).
    """
    col = int(np.argmin(np.abs(result.f_hz - f_tone)))
    if abs(result.f_hz[col] - f_tone) > 0.05 * f_tone:
        raise ValueError(f"no scan column near {f_tone} Hz")
    others = np.arange(result.f_hz.size) != col
    k_off = int(np.count_nonzero(others))
    rows = []
    for i, amp in enumerate(result.amplitudes_vpp):
        med = float(np.median(result.p_up[i, others]))
        se_med = 1.2533 * float(np.mean(result.std_err[i, others])) / math.sqrt(k_off)
        pooled = math.hypot(float(result.std_err[i, col]), se_med)
        deficit = med - float(result.p_up[i, col])
        rows.append({"amplitude_vpp": float(amp), "deficit": deficit,
                     "pooled_se": pooled,
                     "detected": bool(deficit > n_sigma * pooled)})
    detected = [r["amplitude_vpp"] for r in rows if r["detected"]]
    return {"threshold_vpp": min(detected) if detected else None,
            "tone_column_hz": float(result.f_hz[col]), "rows": rows}


def export_tone_scan(result: ToneScanResult, path) -> None:
    with Path(path).open("w") as fh:
        fh.write(TONE_SCAN_HEADER + "\n")
        for i, amp in enumerate(result.amplitudes_vpp):
            for j, f in enumerate(result.f_hz):
                fh.write(f"{float(f)!r},{float(amp)!r},"
                         f"{float(result.p_up[i, j])!r},"
                         f"{float(result.std_err[i, j])!r}\n")


def import_tone_scan(path, shots: int = 0) -> ToneScanResult:
    with Path(path).open() as fh:
        header = fh.readline().strip()
        if header != TONE_SCAN_HEADER:
            raise ValueError(f"unrecognized tone-scan header {header!r}")
        data = np.loadtxt(fh, delimiter=",")
    data = np.atleast_2d(data)
    f = np.unique(data[:, 0])
    amps = np.unique(data[:, 1])
    p = np.full((amps.size, f.size), np.nan)
    se = np.full((amps.size, f.size), np.nan)
    for row in data:
        i = int(np.argmin(np.abs(amps - row[1])))
        j = int(np.argmin(np.abs(f - row[0])))
        p[i, j] = row[2]
        se[i, j] = row[3]
    return ToneScanResult(f_hz=f, amplitudes_vpp=amps, p_up=p, std_err=se,
                          shots=shots)
