"""From fringes to inertial estimates to a dead-reckoned track.

The fringe model ``P(phi3) = c0 + (C/2) cos(phi3 + Phi)`` is linear in
``(c0, A, B)`` after writing it as ``c0 + A cos(phi3) + B sin(phi3)``, so the
fit is a single least-squares solve. ``Phi`` is only known modulo 2 pi; the
integer fringe order is an explicit argument everywhere it matters.

Acceleration and rotation are separated with two scans whose only difference
is the sign of the atomic velocity: the acceleration phase is even under that
reversal and the Sagnac phase is odd.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .interferometer import (
    FringeScan, InterferometerConfig, rotation_phase, sagnac_area_from_geometry,
)

TWO_PI = 2.0 * math.pi
MIN_FIT_POINTS = 5
LOW_CONTRAST = 0.05
CONTRAST_OVERSHOOT = 1.05


def wrap_phase(phase: float) -> float:
    """Map a phase into (-pi, pi]."""
    w = math.remainder(phase, TWO_PI)
    return math.pi if w == -math.pi else w


def resolve_phase(phase: float, fringe_order: int = 0) -> float:
    """Absolute phase from a wrapped one plus an integer fringe order."""
    return wrap_phase(phase) + TWO_PI * fringe_order


def order_from_hint(phase: float, predicted: float) -> int:
    """Fringe order that puts ``phase`` closest to a predicted absolute phase."""
    return int(round((predicted - wrap_phase(phase)) / TWO_PI))


@dataclass(frozen=True)
class PhaseEstimate:
    total_phase: float  # [0, 2 pi)
    contrast_est: float
    offset: float
    residual_rms: float
    covariance: np.ndarray  # (offset, contrast, phase)
    flags: tuple[str, ...] = ()

    @property
    def phase_sigma(self) -> float:
        return math.sqrt(max(self.covariance[2, 2], 0.0))

    @property
    def low_contrast(self) -> bool:
        return "low_contrast" in self.flags


def fit_fringe(scan: FringeScan) -> PhaseEstimate:
    phi = scan.phases
    y = scan.populations
    n = len(phi)
    if n < MIN_FIT_POINTS:
        raise ValueError(f"fringe fit needs >= {MIN_FIT_POINTS} points, got {n}")
    if np.ptp(phi) < math.pi:
        raise ValueError("scan must span at least pi of commanded phase")
    X = np.column_stack([np.ones(n), np.cos(phi), np.sin(phi)])
    if np.linalg.matrix_rank(X) < 3:
        raise ValueError("fringe design matrix is rank deficient")
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    c0, a, b = coef
    resid = y - X @ coef
    amp = math.hypot(a, b)
    contrast = 2.0 * amp
    total = math.atan2(-b, a) % TWO_PI

    dof = n - 3
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov_lin = sigma2 * np.linalg.inv(X.T @ X)
    # d(c0, C, Phi)/d(c0, A, B)
    jac = np.zeros((3, 3))
    jac[0, 0] = 1.0
    if amp > 0:
        jac[1, 1:] = 2.0 * a / amp, 2.0 * b / amp
        jac[2, 1:] = b / amp**2, -a / amp**2
    cov = jac @ cov_lin @ jac.T

    flags = []
    if contrast < LOW_CONTRAST:
        flags.append("low_contrast")
    if contrast > 1.0:
        flags.append("contrast_overshoot")
    return PhaseEstimate(
        total_phase=total if total < TWO_PI else 0.0,
        contrast_est=contrast,
        offset=float(c0),
        residual_rms=math.sqrt(float(resid @ resid) / n),
        covariance=cov,
        flags=tuple(flags),
    )


def separate_inertial(phase_forward: float, phase_backward: float) -> tuple[float, float]:
    """Split resolved forward/backward phases into (accel phase, rotation phase)."""
    return (
        0.5 * (phase_forward + phase_backward),
        0.5 * (phase_forward - phase_backward),
    )


def accel_from_phase(phase: float, config: InterferometerConfig) -> float:
    scale = config.k_eff * config.T**2
    if scale == 0:
        raise ValueError("k_eff * T^2 is zero; acceleration not observable")
    return -phase / scale


def rotation_from_phase(phase: float, config: InterferometerConfig, sagnac_area: float) -> float:
    if sagnac_area == 0:
        raise ValueError("zero Sagnac area; rotation not observable")
    return phase / rotation_phase(config, 1.0, sagnac_area)


@dataclass(frozen=True)
class Sensitivity:
    accel_res: float  # m/s^2 per phase_resolution
    rot_res: float  # rad/s per phase_resolution
    shot_noise_phase: float  # rad, single shot of n_atoms_per_shot atoms
    phase_resolution: float = 1.0

    def required_phase(self, accel_target: float) -> float:
        """Phase resolution needed to resolve ``accel_target`` (m/s^2)."""
        return accel_target / self.accel_res * self.phase_resolution


def sensitivity(config: InterferometerConfig, phase_resolution: float = 1.0) -> Sensitivity:
    accel_res = phase_resolution / abs(config.k_eff * config.T**2)
    area = sagnac_area_from_geometry(config)
    dphi_domega = abs(rotation_phase(config, 1.0, area))
    rot_res = phase_resolution / dphi_domega if dphi_domega else math.inf
    n = config.n_atoms_per_shot
    shot = 1.0 / (config.contrast * math.sqrt(n)) if n else math.inf
    return Sensitivity(accel_res, rot_res, shot, phase_resolution)


def shot_noise_phase_sigma(contrast: float, n_atoms: float) -> float:
    """Standard quantum limit 1/(C sqrt(N)) for N detected atoms."""
    return 1.0 / (contrast * math.sqrt(n_atoms))


@dataclass
class InertialEstimate:
    accel: float
    rot_rate: float
    accel_phase: float
    rotation_phase: float
    forward: PhaseEstimate
    backward: PhaseEstimate
    orders: tuple[int, int] = (0, 0)

    def to_dict(self) -> dict:
        return {
            "accel": self.accel,
            "rot_rate": self.rot_rate,
            "accel_phase": self.accel_phase,
            "rotation_phase": self.rotation_phase,
            "phase": [self.forward.total_phase, self.backward.total_phase],
            "contrast": [self.forward.contrast_est, self.backward.contrast_est],
            "covariance": [self.forward.covariance.tolist(), self.backward.covariance.tolist()],
            "orders": list(self.orders),
        }


def invert_dual_scan(
    scan_forward: FringeScan,
    scan_backward: FringeScan,
    config: InterferometerConfig,
    phase_offset: float = 0.0,
    orders: Optional[tuple[int, int]] = None,
    predicted: Optional[tuple[float, float]] = None,
) -> InertialEstimate:
    """Fit both beam directions and return acceleration and rotation rate.

    ``config`` is the forward-beam instrument. ``phase_offset`` is the laser
    phase combination phi1 - 2 phi2 from a zero-input calibration; it is
    removed before unwrapping. Fringe orders are taken from ``orders`` if
    given, otherwise from ``predicted`` absolute phases, otherwise zero.
    """
    fwd, bwd = fit_fringe(scan_forward), fit_fringe(scan_backward)
    raw = (fwd.total_phase - phase_offset, bwd.total_phase - phase_offset)
    if orders is None:
        if predicted is None:
            orders = (0, 0)
        else:
            orders = (order_from_hint(raw[0], predicted[0]), order_from_hint(raw[1], predicted[1]))
    phi_f = resolve_phase(raw[0], orders[0])
    phi_b = resolve_phase(raw[1], orders[1])
    phi_a, phi_rot = separate_inertial(phi_f, phi_b)
    area = sagnac_area_from_geometry(config)
    return InertialEstimate(
        accel=accel_from_phase(phi_a, config),
        rot_rate=rotation_from_phase(phi_rot, config, area),
        accel_phase=phi_a,
        rotation_phase=phi_rot,
        forward=fwd,
        backward=bwd,
        orders=tuple(orders),
    )


@dataclass(frozen=True)
class NavState:
    time: float
    position: np.ndarray
    velocity: np.ndarray
    heading: float


@dataclass
class NavTrajectory:
    t: np.ndarray
    position: np.ndarray  # (n, 2)
    velocity: np.ndarray  # (n, 2)
    heading: np.ndarray

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i) -> NavState:
        return NavState(
            float(self.t[i]), self.position[i].copy(), self.velocity[i].copy(), float(self.heading[i])
        )

    @property
    def final(self) -> NavState:
        return self[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "vx", "vy", "heading"])
        for i in range(len(self.t)):
            w.writerow([repr(float(v)) for v in (
                self.t[i], *self.position[i], *self.velocity[i], self.heading[i]
            )])
        return buf.getvalue()


def dead_reckon(
    accel: Sequence,
    rot_rate: Sequence[float],
    dt: float,
    initial: Optional[NavState] = None,
) -> NavTrajectory:
    """Planar strapdown integration with the trapezoid rule.

    ``accel`` is body-frame acceleration, shape (n,) for a single forward
    axis or (n, 2); ``rot_rate`` has shape (n,). Sample k is taken at
    ``initial.time + k*dt``. Heading, then navigation-frame acceleration,
    velocity and position are each trapezoid-integrated.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    a = np.asarray(accel, dtype=float)
    if a.ndim == 1:
        a = np.column_stack([a, np.zeros_like(a)])
    w = np.asarray(rot_rate, dtype=float)
    if a.shape != (len(w), 2):
        raise ValueError("accel and rot_rate lengths differ")
    bad = np.flatnonzero(~(np.isfinite(a).all(axis=1) & np.isfinite(w)))
    if bad.size:
        raise ValueError(f"non-finite sample at index {int(bad[0])}")
    if initial is None:
        initial = NavState(0.0, np.zeros(2), np.zeros(2), 0.0)
    n = len(w)
    t = initial.time + dt * np.arange(n)

    heading = np.empty(n)
    heading[0] = initial.heading
    if n > 1:
        heading[1:] = initial.heading + np.cumsum(0.5 * (w[1:] + w[:-1]) * dt)

    c, s = np.cos(heading), np.sin(heading)
    a_nav = np.column_stack([c * a[:, 0] - s * a[:, 1], s * a[:, 0] + c * a[:, 1]])

    vel = np.empty((n, 2))
    pos = np.empty((n, 2))
    vel[0] = initial.velocity
    pos[0] = initial.position
    if n > 1:
        vel[1:] = initial.velocity + np.cumsum(0.5 * (a_nav[1:] + a_nav[:-1]) * dt, axis=0)
        pos[1:] = initial.position + np.cumsum(0.5 * (vel[1:] + vel[:-1]) * dt, axis=0)
    return NavTrajectory(t, pos, vel, heading)


def position_sigma_from_accel_noise(sigma_accel: float, dt: float, n: int) -> float:
    """Std of the final position when each of n samples carries white accel noise.

    Propagates through the same double trapezoid used by :func:`dead_reckon`.
    """
    if n < 2:
        return 0.0
    # weight of sample j in v_k, then in p_{n-1}
    wv = np.zeros((n, n))
    for k in range(1, n):
        wv[k] = wv[k - 1]
        wv[k, k - 1] += 0.5 * dt
        wv[k, k] += 0.5 * dt
    wp = 0.5 * dt * (wv[:-1] + wv[1:]).sum(axis=0)
    return float(sigma_accel * np.linalg.norm(wp))
