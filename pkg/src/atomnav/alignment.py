"""Raman beam timing and horizontal alignment tolerance."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .interferometer import InterferometerConfig

LINEWIDTH_FACTOR = 0.8
DEFAULT_SAFETY_FACTOR = 10.0


@dataclass(frozen=True)
class BeamGeometry:
    d: float
    v_z: float
    k_eff: float
    tilt: float = 0.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"beam width d must be > 0, got {self.d}")
        if not self.v_z > 0:
            raise ValueError(f"v_z must be > 0, got {self.v_z}")

    @classmethod
    def from_config(cls, config: InterferometerConfig, tilt: float = 0.0) -> "BeamGeometry":
        return cls(d=config.d, v_z=abs(config.v_z), k_eff=config.k_eff, tilt=tilt)


def pulse_duration(g: BeamGeometry) -> float:
    return g.d / g.v_z


def raman_linewidth(g: BeamGeometry) -> float:
    """Transit-limited Raman linewidth 2 pi * 0.8 / tau, in rad/s."""
    return 2.0 * math.pi * LINEWIDTH_FACTOR * g.v_z / g.d


def doppler_shift(g: BeamGeometry) -> float:
    return -g.k_eff * g.v_z * math.sin(g.tilt)


def max_tilt(g: BeamGeometry) -> float:
    """Tilt at which the Doppler shift equals the Raman linewidth."""
    kv = abs(g.k_eff * g.v_z)
    if kv == 0:
        raise ValueError("k_eff * v_z is zero; tilt bound undefined")
    return math.asin(min(1.0, raman_linewidth(g) / kv))


@dataclass(frozen=True)
class AlignmentReport:
    tau_s: float
    linewidth_rad_s: float
    max_tilt_rad: float
    tilt_rad: float
    safety_factor: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "tau_s": self.tau_s,
            "linewidth_rad_s": self.linewidth_rad_s,
            "max_tilt_rad": self.max_tilt_rad,
            "tilt_rad": self.tilt_rad,
            "safety_factor": self.safety_factor,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def check_alignment(g: BeamGeometry, safety_factor: float = DEFAULT_SAFETY_FACTOR) -> AlignmentReport:
    """Pass iff ``|tilt| * safety_factor <= max_tilt``."""
    if safety_factor < 1:
        raise ValueError(f"safety_factor must be >= 1, got {safety_factor}")
    bound = max_tilt(g)
    return AlignmentReport(
        tau_s=pulse_duration(g),
        linewidth_rad_s=raman_linewidth(g),
        max_tilt_rad=bound,
        tilt_rad=g.tilt,
        safety_factor=safety_factor,
        passed=abs(g.tilt) * safety_factor <= bound,
    )
