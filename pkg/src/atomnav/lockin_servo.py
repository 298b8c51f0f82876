"""Lock-in demodulation, FVC error signal and an integral frequency servo.

The photodiode signal is ``noise + s1 sin(nu t) + s2 sin(2 nu t)``. Averaged
against ``sin(nu t)`` over whole reference periods it gives exactly ``s1/2``;
:func:`demodulate` doubles that so the returned number is ``s1`` itself.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import RB87_5P32_SPLITTINGS

MIN_SAMPLES = 16
PERIOD_TOL = 1e-9
CONVERGE_RUN = 10
DIVERGE_RUN = 100


@dataclass(frozen=True)
class ModulatedSignal:
    sample_rate: float
    samples: np.ndarray
    ref_freq: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.samples.size == 0:
            raise ValueError("signal has no samples")
        if not self.sample_rate > 2.0 * self.ref_freq:
            raise ValueError(
                f"sample rate {self.sample_rate} Hz does not resolve reference {self.ref_freq} Hz"
            )

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def periods(self) -> float:
        return self.samples.size * self.ref_freq / self.sample_rate


def synthesize(
    s1: float,
    s2: float,
    ref_freq: float,
    noise_rms: float = 0.0,
    duration: float = 1e-3,
    sample_rate: float = 10e6,
    rng_seed=None,
) -> ModulatedSignal:
    if not sample_rate > 2.0 * ref_freq:
        raise ValueError(
            f"Nyquist violation: sample rate {sample_rate} Hz <= 2 x {ref_freq} Hz"
        )
    n = int(round(duration * sample_rate))
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    t = np.arange(n) / sample_rate
    w = 2.0 * math.pi * ref_freq
    x = s1 * np.sin(w * t) + s2 * np.sin(2.0 * w * t)
    if noise_rms > 0:
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        x = x + rng.normal(0.0, noise_rms, n)
    return ModulatedSignal(sample_rate, x, ref_freq)


def lockin_integral(sig: ModulatedSignal) -> float:
    """(1/T) * sum(x sin(nu t) dt) over the record; equals s1/2 for whole periods."""
    periods = sig.periods
    if abs(periods - round(periods)) > PERIOD_TOL * max(1.0, periods) or round(periods) < 1:
        raise ValueError(
            f"record spans {periods!r} reference periods; a whole number is required"
        )
    ref = np.sin(2.0 * math.pi * sig.ref_freq * sig.times)
    dt = 1.0 / sig.sample_rate
    return float(np.sum(sig.samples * ref) * dt / sig.duration)


def demodulate(sig: ModulatedSignal) -> float:
    """In-phase amplitude estimate of the component at the reference frequency."""
    return 2.0 * lockin_integral(sig)


@dataclass(frozen=True)
class ServoConfig:
    gain: float
    setpoint: float
    fvc_slope: float = 1.0
    v_offset: Optional[float] = None
    max_steps: int = 10_000
    tolerance: float = 1.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")

    @property
    def offset(self) -> float:
        """Offset voltage that zeroes the FVC output at the setpoint."""
        if self.v_offset is None:
            return self.fvc_slope * self.setpoint
        return self.v_offset

    @property
    def loop_gain(self) -> float:
        return self.gain * self.fvc_slope


def fvc_error(freq: float, cfg: ServoConfig) -> float:
    return cfg.fvc_slope * freq - cfg.offset


@dataclass
class ServoResult:
    status: str  # "converged", "unstable" or "max_steps"
    steps: np.ndarray
    freqs: np.ndarray
    errors: np.ndarray
    converged_at: Optional[int] = None
    loop_gain: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_freq(self) -> float:
        return float(self.freqs[-1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "freq_hz", "error"])
        for k, f, e in zip(self.steps, self.freqs, self.errors):
            w.writerow([int(k), repr(float(f)), repr(float(e))])
        return buf.getvalue()


def run_servo(
    initial_freq: float,
    disturbance: Optional[Callable[[int], float]],
    cfg: ServoConfig,
) -> ServoResult:
    """Discrete integral lock: f[k+1] = f[k] - gain * err[k] + disturbance(k).

    Stops once the frequency stays within ``tolerance`` of the setpoint for
    ten consecutive steps (``converged_at`` is the first step of that run),
    or when ``|err|`` has grown for a hundred steps in a row (unstable).
    """
    freq = float(initial_freq)
    steps, freqs, errors = [], [], []
    in_band = 0
    growing = 0
    prev_abs = math.inf
    status = "max_steps"
    converged_at = None
    for k in range(cfg.max_steps):
        err = fvc_error(freq, cfg)
        steps.append(k)
        freqs.append(freq)
        errors.append(err)
        if abs(freq - cfg.setpoint) < cfg.tolerance:
            in_band += 1
            if in_band == CONVERGE_RUN:
                status, converged_at = "converged", k - CONVERGE_RUN + 1
                break
        else:
            in_band = 0
        growing = growing + 1 if abs(err) > prev_abs else 0
        prev_abs = abs(err)
        if growing >= DIVERGE_RUN or not math.isfinite(err):
            status = "unstable"
            break
        freq = freq - cfg.gain * err + (disturbance(k) if disturbance else 0.0)
    return ServoResult(
        status, np.array(steps), np.array(freqs), np.array(errors), converged_at, cfg.loop_gain
    )


@dataclass
class SasSpectrum:
    detuning: np.ndarray
    absorption: np.ndarray
    dip_centers: list = field(default_factory=list)
    crossovers: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["detuning_hz", "absorption"])
        for d, a in zip(self.detuning, self.absorption):
            w.writerow([repr(float(d)), repr(float(a))])
        return buf.getvalue()


def _lorentzian(x, center, fwhm):
    hw = 0.5 * fwhm
    return hw**2 / ((x - center) ** 2 + hw**2)


def sas_spectrum(
    detuning: Sequence[float],
    transitions: Sequence[tuple[float, float]],
    doppler_width: float,
    lamb_dip_width: float,
    doppler_center: float = 0.0,
    crossover_depth_scale: float = 1.0,
) -> SasSpectrum:
    """Saturated-absorption lineshape: Gaussian Doppler profile with Lamb dips.

    ``doppler_width`` and ``lamb_dip_width`` are FWHM values in Hz. Each
    transition ``(center, depth)`` opens a Lorentzian dip of fractional
    ``depth``; each pair opens a crossover dip at the midpoint whose depth is
    the mean of the pair's depths times ``crossover_depth_scale``.
    """
    if not (doppler_width > 0 and lamb_dip_width > 0):
        raise ValueError("widths must be > 0")
    x = np.asarray(detuning, dtype=float)
    sigma = doppler_width / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    doppler = np.exp(-0.5 * ((x - doppler_center) / sigma) ** 2)
    dips = np.zeros_like(x)
    centers = []
    for center, depth in transitions:
        dips += depth * _lorentzian(x, center, lamb_dip_width)
        centers.append(center)
    crossovers = []
    for i in range(len(transitions)):
        for j in range(i + 1, len(transitions)):
            (c1, d1), (c2, d2) = transitions[i], transitions[j]
            mid = 0.5 * (c1 + c2)
            dips += crossover_depth_scale * 0.5 * (d1 + d2) * _lorentzian(x, mid, lamb_dip_width)
            crossovers.append(mid)
    absorption = doppler * np.clip(1.0 - dips, 0.0, None)
    return SasSpectrum(x, absorption, centers, crossovers)


def rb87_repump_transitions(depth: float = 0.3) -> list[tuple[float, float]]:
    """F=1 -> F'=0, 1, 2 line positions in Hz, relative to the F'=2 repump line."""
    s01, s12, _ = RB87_5P32_SPLITTINGS
    return [(-(s01 + s12), depth), (-s12, depth), (0.0, depth)]
