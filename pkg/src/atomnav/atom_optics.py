"""Two-level Raman pulse propagator.

States are written in the (f, e) basis where ``f`` is ``|f, p>`` and ``e`` is
``|e, p + hbar k_eff>``; the momentum label rides along with the internal
state so no wavepacket is propagated here. Pulses are square and on
two-photon resonance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-9


class PulseLabel(enum.Enum):
    HALF_PI = "HalfPi"
    PI = "Pi"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class AtomState:
    amp_f: complex
    amp_e: complex

    @classmethod
    def ground(cls) -> "AtomState":
        return cls(1.0 + 0j, 0j)

    @classmethod
    def from_vector(cls, vec) -> "AtomState":
        return cls(complex(vec[0]), complex(vec[1]))

    def as_vector(self) -> np.ndarray:
        return np.array([self.amp_f, self.amp_e], dtype=complex)

    @property
    def norm(self) -> float:
        return math.sqrt(abs(self.amp_f) ** 2 + abs(self.amp_e) ** 2)

    @property
    def population_f(self) -> float:
        return abs(self.amp_f) ** 2

    @property
    def population_e(self) -> float:
        return abs(self.amp_e) ** 2


@dataclass(frozen=True)
class RamanPulse:
    """A square Raman pulse.

    ``rabi_phase`` is the pulse area Omega*tau; ``laser_phase`` is the
    effective optical phase imprinted on the f -> e transition.
    """

    rabi_phase: float
    laser_phase: float = 0.0
    duration: float = 0.0
    label: PulseLabel = PulseLabel.CUSTOM

    def __post_init__(self):
        if not (math.isfinite(self.rabi_phase) and math.isfinite(self.laser_phase)):
            raise ValueError("pulse phases must be finite")
        if self.rabi_phase < 0:
            raise ValueError(f"rabi_phase must be >= 0, got {self.rabi_phase}")
        if self.label is PulseLabel.HALF_PI and self.rabi_phase != math.pi / 2:
            raise ValueError("HalfPi pulse requires rabi_phase == pi/2")
        if self.label is PulseLabel.PI and self.rabi_phase != math.pi:
            raise ValueError("Pi pulse requires rabi_phase == pi")

    @classmethod
    def half_pi(cls, laser_phase: float = 0.0, duration: float = 0.0) -> "RamanPulse":
        return cls(math.pi / 2, laser_phase, duration, PulseLabel.HALF_PI)

    @classmethod
    def pi(cls, laser_phase: float = 0.0, duration: float = 0.0) -> "RamanPulse":
        return cls(math.pi, laser_phase, duration, PulseLabel.PI)


def pulse_unitary(pulse: RamanPulse) -> np.ndarray:
    """Rabi rotation for a resonant pulse, rows/columns ordered (f, e).

    U = [[cos(a/2), -i e^{-i phi} sin(a/2)],
         [-i e^{+i phi} sin(a/2), cos(a/2)]]

    On ``|f>`` a pi/2 pulse gives ``(|f> - i e^{i phi}|e>)/sqrt(2)``. Only
    populations are compared against the fringe formula, and those do not
    depend on which sign is put on the off-diagonal phases.
    """
    half = 0.5 * pulse.rabi_phase
    c, s = math.cos(half), math.sin(half)
    phase = pulse.laser_phase
    return np.array(
        [
            [c, -1j * np.exp(-1j * phase) * s],
            [-1j * np.exp(1j * phase) * s, c],
        ],
        dtype=complex,
    )


def apply_pulse(state: AtomState, pulse: RamanPulse) -> AtomState:
    if abs(state.norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm={state.norm!r})")
    return AtomState.from_vector(pulse_unitary(pulse) @ state.as_vector())


def compose_sequence(pulses: Sequence[RamanPulse]) -> np.ndarray:
    """Total unitary of ``pulses`` applied in list order (first pulse acts first)."""
    if len(pulses) == 0:
        raise ValueError("pulse sequence is empty")
    total = np.eye(2, dtype=complex)
    for pulse in pulses:
        total = pulse_unitary(pulse) @ total
    return total


def apply_sequence(state: AtomState, pulses: Sequence[RamanPulse]) -> AtomState:
    if abs(state.norm - 1.0) > NORM_TOL:
        raise ValueError(f"state is not normalized (norm={state.norm!r})")
    return AtomState.from_vector(compose_sequence(pulses) @ state.as_vector())


def mach_zehnder(phi1: float, phi2: float, phi3: float) -> list[RamanPulse]:
    """The pi/2 - pi - pi/2 sequence with the given laser phases."""
    return [RamanPulse.half_pi(phi1), RamanPulse.pi(phi2), RamanPulse.half_pi(phi3)]


def ground_population(phi1: float, phi2: float, phi3: float) -> float:
    """Population left in ``|f>`` after a Mach-Zehnder sequence starting in ``|f>``."""
    u = compose_sequence(mach_zehnder(phi1, phi2, phi3))
    return float(abs(u[0, 0]) ** 2)
