"""Mach-Zehnder atom interferometer: inertial phases, fringes and detection.

Phase bookkeeping follows the fringe formula

    P = 1/2 [1 + C cos(phi_a + phi_Omega + phi1 - 2 phi2 + phi3)]

with ``phi_a = -k_eff a T^2`` and ``phi_Omega = 2 m A Omega / hbar``. The
Sagnac area is signed by the beam direction, so reversing ``v_z`` flips the
rotation phase while leaving the acceleration phase alone.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import (
    BEAM_WIDTH, HBAR, LAMBDA_D2, PLANCK, PZT_MAX_DISPLACEMENT, PZT_MAX_PHASE,
    RB87_MASS, V_Z0, ZONE_SPACING,
)

PZT_PHASE_PER_METER = PZT_MAX_PHASE / PZT_MAX_DISPLACEMENT


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class InterferometerConfig:
    lambda_laser: float
    k_eff: float
    v_z: float
    d: float
    L: float
    T: float
    atom_mass: float = RB87_MASS
    n_atoms_per_shot: int = 10**6
    contrast: float = 1.0

    def __post_init__(self):
        for name in ("lambda_laser", "k_eff", "v_z", "d", "L", "T", "atom_mass", "contrast"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 < self.contrast <= 1.0:
            raise ValueError(f"contrast must be in (0, 1], got {self.contrast}")
        if self.T <= 0:
            raise ValueError(f"pulse interval T must be > 0, got {self.T}")
        if self.n_atoms_per_shot < 0:
            raise ValueError("n_atoms_per_shot must be >= 0")

    @classmethod
    def from_geometry(
        cls,
        lambda_laser: float = LAMBDA_D2,
        v_z: float = V_Z0,
        d: float = BEAM_WIDTH,
        L: float = ZONE_SPACING,
        atom_mass: float = RB87_MASS,
        n_atoms_per_shot: int = 10**6,
        contrast: float = 1.0,
        k_sign: int = 1,
    ) -> "InterferometerConfig":
        """Counter-propagating beams: k_eff = k1 + k2 ~ 2 * 2pi/lambda, T = L/|v_z|."""
        if v_z == 0:
            raise ValueError("v_z must be non-zero")
        k_eff = k_sign * 2.0 * (2.0 * math.pi / lambda_laser)
        return cls(
            lambda_laser=lambda_laser, k_eff=k_eff, v_z=v_z, d=d, L=L,
            T=L / abs(v_z), atom_mass=atom_mass,
            n_atoms_per_shot=int(n_atoms_per_shot), contrast=contrast,
        )

    def reversed_beam(self) -> "InterferometerConfig":
        """Same instrument with the atomic beam running the other way."""
        return InterferometerConfig(**{**asdict(self), "v_z": -self.v_z})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class InertialInput:
    """Acceleration along k_eff and rotation rate normal to the Sagnac loop.

    ``sagnac_area`` of ``None`` means "use the loop enclosed by the recoil
    geometry of the config in use".
    """

    accel: float = 0.0
    rot_rate: float = 0.0
    sagnac_area: Optional[float] = None

    def __post_init__(self):
        vals = [self.accel, self.rot_rate]
        if self.sagnac_area is not None:
            vals.append(self.sagnac_area)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("inertial inputs must be finite")

    def area_for(self, config: InterferometerConfig) -> float:
        if self.sagnac_area is None:
            return sagnac_area_from_geometry(config)
        return self.sagnac_area


@dataclass
class FringeScan:
    phases: np.ndarray
    populations: np.ndarray
    counts: Optional[np.ndarray] = None
    n_atoms: Optional[int] = None

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.phases.shape != self.populations.shape or self.phases.ndim != 1:
            raise ValueError("phases and populations must be 1-D and equal length")
        if len(self.phases) < 3:
            raise ValueError("a fringe scan needs at least 3 points")
        if self.counts is not None and self.counts.shape != self.phases.shape:
            raise ValueError("counts must match phases in length")

    def __len__(self):
        return len(self.phases)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase_rad", "population", "count"])
        for i, (ph, p) in enumerate(zip(self.phases, self.populations)):
            count = "" if self.counts is None else int(self.counts[i])
            w.writerow([repr(float(ph)), repr(float(p)), count])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FringeScan":
        rows = list(csv.DictReader(io.StringIO(text)))
        phases = [float(r["phase_rad"]) for r in rows]
        pops = [float(r["population"]) for r in rows]
        counts = None
        if rows and all(r.get("count") not in (None, "") for r in rows):
            counts = [int(r["count"]) for r in rows]
        return cls(phases, pops, counts)


def accel_phase(config: InterferometerConfig, accel: float) -> float:
    return -config.k_eff * accel * config.T**2


def de_broglie_wavelength(config: InterferometerConfig) -> float:
    if config.v_z == 0 or config.atom_mass == 0:
        raise ValueError("de Broglie wavelength undefined for zero v_z or mass")
    return PLANCK / (config.atom_mass * config.v_z)


def rotation_phase(config: InterferometerConfig, rot_rate: float, sagnac_area: float) -> float:
    """Sagnac phase 4 pi A Omega / (lambda_dB v_z), i.e. 2 m A Omega / hbar.

    The wavelength in this expression is the atomic de Broglie wavelength;
    with the optical wavelength the result is off by orders of magnitude.
    """
    lam_db = de_broglie_wavelength(config)
    return 4.0 * math.pi / (lam_db * config.v_z) * sagnac_area * rot_rate


def recoil_velocity(config: InterferometerConfig) -> float:
    return HBAR * config.k_eff / config.atom_mass


def sagnac_area_from_geometry(config: InterferometerConfig) -> float:
    """Signed area of the parallelogram traced by the two arms over 2T."""
    return recoil_velocity(config) * config.v_z * config.T**2


def phase_from_trajectory(
    config: InterferometerConfig,
    position_at: Callable[[float], float],
    pulse_times: Sequence[float],
    rtol: float = 1e-9,
) -> float:
    """k_eff times the second difference of x(t) sampled at the three pulses.

    This is the phase the laser imprints when the atom moves along k_eff;
    for x = a t^2 / 2 it returns +k_eff a T^2, i.e. minus ``accel_phase``.
    """
    t1, t2, t3 = pulse_times
    if not (t1 < t2 < t3):
        raise ValueError("pulse times must be strictly increasing")
    dt1, dt2 = t2 - t1, t3 - t2
    if abs(dt1 - dt2) > rtol * config.T or abs(dt1 - config.T) > rtol * config.T:
        raise ValueError(
            f"pulse intervals ({dt1!r}, {dt2!r}) must both equal T={config.T!r}"
        )
    x1, x2, x3 = position_at(t1), position_at(t2), position_at(t3)
    return config.k_eff * (x1 - 2.0 * x2 + x3)


def fringe_probability(total_phase, contrast: float = 1.0):
    if not 0.0 < contrast <= 1.0:
        raise ValueError(f"contrast must be in (0, 1], got {contrast}")
    p = 0.5 * (1.0 + contrast * np.cos(total_phase))
    return float(p) if np.ndim(p) == 0 else p


def inertial_phase(config: InterferometerConfig, inertial: InertialInput) -> float:
    return accel_phase(config, inertial.accel) + rotation_phase(
        config, inertial.rot_rate, inertial.area_for(config)
    )


def simulate_shot(
    config: InterferometerConfig,
    inertial: InertialInput,
    laser_phases: Sequence[float],
    rng_seed=None,
    shot_noise: bool = True,
) -> tuple[float, Optional[int]]:
    """One pass of the atom beam: true ``|f>`` probability and a binomial count.

    With ``shot_noise=False`` the count is ``None``.
    """
    phi1, phi2, phi3 = laser_phases
    total = inertial_phase(config, inertial) + phi1 - 2.0 * phi2 + phi3
    p = fringe_probability(total, config.contrast)
    p = min(max(p, 0.0), 1.0)
    if not shot_noise:
        return p, None
    count = int(_rng(rng_seed).binomial(config.n_atoms_per_shot, p))
    return p, count


def pzt_phase(displacement):
    """Third-pulse phase offset for a PZT displacement (30 rad at 9 um)."""
    disp = np.asarray(displacement, dtype=float)
    if np.any(disp < 0) or np.any(disp > PZT_MAX_DISPLACEMENT):
        raise ValueError(
            f"PZT displacement must lie in [0, {PZT_MAX_DISPLACEMENT}] m"
        )
    out = disp / PZT_MAX_DISPLACEMENT * PZT_MAX_PHASE
    return float(out) if out.ndim == 0 else out


def pzt_scan(
    config: InterferometerConfig,
    inertial: InertialInput,
    base_phases: Sequence[float],
    pzt_displacements: Sequence[float],
    rng_seed=None,
    shot_noise: bool = True,
) -> FringeScan:
    phi1, phi2 = base_phases
    offsets = np.atleast_1d(pzt_phase(np.asarray(pzt_displacements, dtype=float)))
    rng = _rng(rng_seed)
    pops, counts = [], []
    for phi3 in offsets:
        p, count = simulate_shot(config, inertial, (phi1, phi2, phi3), rng, shot_noise)
        if shot_noise:
            counts.append(count)
            n = config.n_atoms_per_shot
            pops.append(count / n if n else 0.0)
        else:
            pops.append(p)
    return FringeScan(
        offsets, np.array(pops), np.array(counts) if shot_noise else None,
        config.n_atoms_per_shot if shot_noise else None,
    )


def default_displacements(points: int, max_displacement: float = PZT_MAX_DISPLACEMENT) -> np.ndarray:
    return np.linspace(0.0, max_displacement, points)
