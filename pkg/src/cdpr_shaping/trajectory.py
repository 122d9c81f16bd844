"""Platform trajectories: the straight-line bang-bang test move and resampling."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidDuration

CSV_COLUMNS = (
    ["t", "x", "y", "z", "phi", "theta", "psi"]
    + ["vx", "vy", "vz", "wx", "wy", "wz"]
    + ["ax", "ay", "az", "alphax", "alphay", "alphaz"]
)


@dataclass(frozen=True)
class PlatformTrajectory:
    """Uniformly sampled pose/twist/acceleration records.

    ``pose``, ``twist`` and ``accel`` are ``(N, 6)`` arrays (translation first,
    then Euler angles / angular velocity / angular acceleration).
    """

    time: np.ndarray
    pose: np.ndarray
    twist: np.ndarray
    accel: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.time, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("time must be a non-empty 1-D array")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        for name in ("pose", "twist", "accel"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim == 2 and a.shape[1] == 3:
                a = np.hstack([a, np.zeros_like(a)])
            if a.shape != (t.size, 6):
                raise ValueError(f"{name} must be ({t.size}, 6), got {a.shape}")
            object.__setattr__(self, name, a)
        object.__setattr__(self, "time", t)

    def __len__(self):
        return self.time.size

    @property
    def dt(self) -> float:
        return float(self.time[1] - self.time[0]) if self.time.size > 1 else 0.0

    @property
    def duration(self) -> float:
        return float(self.time[-1] - self.time[0])

    def to_csv(self, path) -> None:
        data = np.hstack([self.time[:, None], self.pose, self.twist, self.accel])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in data:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "PlatformTrajectory":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_COLUMNS:
                raise ValueError(f"{Path(path).name}: unexpected header {header}")
            data = np.array([[float(v) for v in row] for row in reader])
        return cls(data[:, 0], data[:, 1:7], data[:, 7:13], data[:, 13:19])


def _time_grid(duration: float, dt: float) -> np.ndarray:
    steps = duration / dt
    k = int(round(steps))
    if abs(steps - k) < 1e-9 * max(1.0, steps):
        return np.arange(k + 1) * dt
    t = np.arange(int(np.floor(steps)) + 1) * dt
    return np.append(t, duration)


def bang_bang_sample(p1, p2, tf: float, t):
    """Position, velocity and acceleration of the bang-bang move at times ``t``.

    Position is parabolic on each half of ``[0, tf]`` and held at ``p2``
    afterwards, so velocity is a triangle peaking at ``tf / 2``.
    """
    p1 = np.asarray(p1, dtype=float).reshape(3)
    p2 = np.asarray(p2, dtype=float).reshape(3)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    beta1 = 2.0 * (p2 - p1) / tf**2
    beta4 = 2.0 * (p1 - p2) / tf**2
    first = (t <= tf / 2)[:, None]
    moving = (t <= tf)[:, None]
    tt = t[:, None]
    ts = (t - tf)[:, None]
    pos = np.where(first, p1 + beta1 * tt**2, np.where(moving, p2 + beta4 * ts**2, p2))
    vel = np.where(first, 2 * beta1 * tt, np.where(moving, 2 * beta4 * ts, 0.0))
    acc = np.where(first, 2 * beta1, np.where(moving, 2 * beta4, 0.0)) * np.ones_like(tt)
    return pos, vel, acc


def bang_bang_line(p1, p2, tf: float, dt: float = 1e-3, duration: float | None = None) -> PlatformTrajectory:
    """Straight move from ``p1`` to ``p2`` in ``tf`` seconds, sampled every ``dt``
    until ``duration`` (defaults to ``tf``)."""
    if tf <= 0:
        raise InvalidDuration(f"tf must be positive, got {tf}")
    if dt <= 0 or dt > tf / 100:
        raise ValueError(f"dt must lie in (0, tf/100], got {dt}")
    duration = tf if duration is None else duration
    if duration < tf:
        raise ValueError("duration must cover the motion")
    t = _time_grid(duration, dt)
    pos, vel, acc = bang_bang_sample(p1, p2, tf, t)
    zeros = np.zeros_like(pos)
    return PlatformTrajectory(t, np.hstack([pos, zeros]), np.hstack([vel, zeros]), np.hstack([acc, zeros]))


def constant(pose, duration: float, dt: float = 1e-3) -> PlatformTrajectory:
    x = np.zeros(6)
    p = np.asarray(pose, dtype=float).ravel()
    x[: p.size] = p
    t = _time_grid(duration, dt)
    z = np.zeros((t.size, 6))
    return PlatformTrajectory(t, np.tile(x, (t.size, 1)), z, z.copy())


def resample(traj: PlatformTrajectory, dt_new: float) -> PlatformTrajectory:
    """Linear interpolation onto a grid of step ``dt_new``; endpoints are kept."""
    if dt_new <= 0:
        raise ValueError("dt_new must be positive")
    t = traj.time[0] + _time_grid(traj.duration, dt_new)
    t[-1] = traj.time[-1]

    def interp(a):
        return np.column_stack([np.interp(t, traj.time, a[:, j]) for j in range(a.shape[1])])

    return PlatformTrajectory(t, interp(traj.pose), interp(traj.twist), interp(traj.accel))


def extend(traj: PlatformTrajectory, duration: float) -> PlatformTrajectory:
    """Hold the final record until ``duration`` (same step)."""
    if duration <= traj.duration + 1e-12:
        return traj
    dt = traj.dt
    extra = int(np.ceil((duration - traj.duration) / dt - 1e-9))
    t = np.concatenate([traj.time, traj.time[-1] + dt * np.arange(1, extra + 1)])
    hold = np.ones((extra, 1))
    return PlatformTrajectory(
        t,
        np.vstack([traj.pose, hold * traj.pose[-1]]),
        np.vstack([traj.twist, hold * traj.twist[-1]]),
        np.vstack([traj.accel, hold * traj.accel[-1]]),
    )
