"""Emulated resonance-frequency feedback.

Real measurements drift: the qubit frequency wanders over hours and the
drive must follow it.  This stand-in emulates the standard tracking loop:
every probe interval the servo measures spin-up probability at two drive
frequencies straddling its current working frequency, converts the
asymmetry into a detuning estimate through the known lineshape slope, and
steps the working frequency.  It is illustrative plumbing, not a model of
any particular feedback implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._rng import derive_rng
from ..qubitsim import QubitParams, rabi_p_up

__all__ = ["FeedbackLog", "frequency_feedback", "make_drift"]


@dataclass(frozen=True)
class FeedbackLog:
    """True vs tracked frequency over a feedback run."""

    times: np.ndarray
    f_true: np.ndarray
    f_tracked: np.ndarray
    corrections: np.ndarray
    flagged: bool

    @property
    def residual_hz(self) -> np.ndarray:
        return self.f_true - self.f_tracked

    def stats(self) -> dict:
        r = self.residual_hz
        return {"max_abs_residual_hz": float(np.max(np.abs(r))),
                "rms_residual_hz": float(np.sqrt(np.mean(r**2))),
                "final_residual_hz": float(r[-1]),
                "flagged": self.flagged}


def make_drift(kind: str, *, rate_hz_per_s: float = 0.0,
               step_hz: float = 0.0, seed: int = 0):
    """Drift model factory: f0 offset as a function of time.

    ``linear`` drifts at a constant rate; ``random_walk`` accumulates a
    Gaussian step per second of elapsed time (evaluated lazily on the
    probe grid, seeded).
    """
    if kind == "none":
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    if kind == "linear":
        return lambda t: rate_hz_per_s * np.asarray(t, dtype=float)
    if kind == "random_walk":
        def walk(t):
            t = np.asarray(t, dtype=float)
            rng = derive_rng(seed)
            dt = np.diff(np.concatenate(([0.0], t)))
            return np.cumsum(rng.normal(0.0, step_hz * np.sqrt(np.maximum(dt, 0)),
                                        size=t.size))
        return walk
    raise ValueError(f"unknown drift kind {kind!r}")


def frequency_feedback(drift, probe_interval_s: float, duration_s: float,
                       qubit: QubitParams = QubitParams(), *,
                       gain: float = 1.0, shots: int | None = None,
                       seed: int = 0) -> FeedbackLog:
    """Run the two-point tracking servo against a drifting resonance.

    ``drift``: callable t -> frequency offset in Hz (see :func:`make_drift`).
    The probe offsets sit half a Rabi linewidth from the working frequency,
    where the lineshape slope is steep; the estimate is the probability
    asymmetry divided by that slope, clipped to one probe offset so a wild
    estimate cannot throw the servo.  ``shots`` adds binomial noise to the
    probe points; None probes noiselessly.

    The run is flagged when the tracking error ever exceeds the capture
    range (one probe offset), which is what happens when the drift moves
    faster than the probe loop can follow.
    """
    n = int(math.floor(duration_s / probe_interval_s)) + 1
    times = np.arange(n) * probe_interval_s
    offsets = np.asarray(drift(times), dtype=float)
    f_true = offsets  # tracked/true both relative to the initial resonance
    delta_probe = qubit.rabi_hz / 2.0
    tau = qubit.pi_time_s
    # lineshape slope at the probe offset, from a symmetric finite difference
    eps = qubit.rabi_hz * 1e-4
    slope = (rabi_p_up(qubit.rabi_hz, delta_probe + eps, tau)
             - rabi_p_up(qubit.rabi_hz, delta_probe - eps, tau)) / (2 * eps)
    asym_slope = 2.0 * slope  # d/d(detuning) of [p(low probe) - p(high probe)]

    f_work = float(f_true[0])
    tracked = np.empty(n)
    corrections = np.empty(n)
    flagged = False
    rng = derive_rng(seed, 1)
    for i in range(n):
        tracked[i] = f_work
        detuning = f_true[i] - f_work
        p_lo = rabi_p_up(qubit.rabi_hz, detuning + delta_probe, tau)
        p_hi = rabi_p_up(qubit.rabi_hz, detuning - delta_probe, tau)
        if shots is not None:
            p_lo = rng.binomial(shots, p_lo) / shots
            p_hi = rng.binomial(shots, p_hi) / shots
        est = (p_lo - p_hi) / asym_slope
        step = gain * float(np.clip(est, -delta_probe, delta_probe))
        corrections[i] = step
        f_work += step
        if abs(detuning) > delta_probe:
            flagged = True
    return FeedbackLog(times=times, f_true=f_true, f_tracked=tracked,
                       corrections=corrections, flagged=flagged)
