"""Impulse-sequence input shapers: construction, convolution, trajectory shaping
and residual-vibration analysis."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .trajectory import PlatformTrajectory

MERGE_TOL = 1e-9
KINDS = ("none", "zv", "zvd", "zvzv", "zvdzvd")


@dataclass(frozen=True)
class ModeSpec:
    frequency: float  # [Hz]
    damping: float = 0.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("mode frequency must be positive")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping ratio must lie in [0, 1)")

    @property
    def epsilon(self) -> float:
        z = self.damping
        return float(np.exp(-z * np.pi / np.sqrt(1.0 - z * z)))


@dataclass(frozen=True)
class ImpulseSequence:
    amplitudes: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=float).ravel()
        t = np.asarray(self.times, dtype=float).ravel()
        if amp.shape != t.shape or amp.size == 0:
            raise ValueError("amplitudes and times must be non-empty and paired")
        if np.any(amp <= 0):
            raise ValueError("impulse amplitudes must be positive")
        if abs(amp.sum() - 1.0) > 1e-12:
            raise ValueError(f"impulse amplitudes must sum to one, got {amp.sum()!r}")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("impulse times must start at 0 and increase strictly")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.amplitudes.size

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def as_rows(self):
        return list(zip(self.amplitudes.tolist(), self.times.tolist()))


UNIT_IMPULSE = ImpulseSequence([1.0], [0.0])


def _normalised(amplitudes, times) -> ImpulseSequence:
    amp = np.asarray(amplitudes, dtype=float)
    return ImpulseSequence(amp / amp.sum(), times)


def zv(mode: ModeSpec) -> ImpulseSequence:
    # spacing is the undamped half period even when damping > 0
    e = mode.epsilon
    return _normalised([1.0, e], [0.0, 1.0 / (2.0 * mode.frequency)])


def zvd(mode: ModeSpec) -> ImpulseSequence:
    e = mode.epsilon
    f = mode.frequency
    return _normalised([1.0, 2.0 * e, e * e], [0.0, 1.0 / (2.0 * f), 1.0 / f])


def convolve(s1: ImpulseSequence, s2: ImpulseSequence) -> ImpulseSequence:
    """Series combination of two shapers; coincident impulses are merged."""
    amp = np.outer(s1.amplitudes, s2.amplitudes).ravel()
    t = np.add.outer(s1.times, s2.times).ravel()
    order = np.argsort(t, kind="stable")
    amp, t = amp[order], t[order]
    merged_t, merged_a = [t[0]], [amp[0]]
    for ti, ai in zip(t[1:], amp[1:]):
        if ti - merged_t[-1] < MERGE_TOL:
            merged_a[-1] += ai
        else:
            merged_t.append(ti)
            merged_a.append(ai)
    merged_a = np.array(merged_a)
    return ImpulseSequence(merged_a / merged_a.sum(), merged_t)


def build(kind: str, modes) -> ImpulseSequence:
    """Shaper by name: ``none``, ``zv``, ``zvd``, ``zvzv`` or ``zvdzvd``.

    Two-mode kinds use the first two entries of ``modes``.
    """
    kind = kind.lower().replace("-", "")
    if kind not in KINDS:
        raise ValueError(f"unknown shaper kind {kind!r}; expected one of {KINDS}")
    if kind == "none":
        return UNIT_IMPULSE
    modes = list(modes)
    single = zvd if kind in ("zvd", "zvdzvd") else zv
    if kind in ("zv", "zvd"):
        return single(modes[0])
    if len(modes) < 2:
        raise ValueError(f"{kind} needs two modes")
    return convolve(single(modes[0]), single(modes[1]))


def shape_signal(shaper: ImpulseSequence, values: np.ndarray, dt: float, before=None) -> np.ndarray:
    """Convolve uniformly sampled rows of ``values`` with the impulse train.

    Impulse times are rounded to the nearest sample.  Before the start the
    signal equals ``before`` (default: its first value); after the end it is
    held at its last value.  The output is longer by the largest delay.
    """
    values = np.asarray(values, dtype=float)
    shifts = np.rint(shaper.times / dt).astype(int)
    n = values.shape[0]
    total = n + int(shifts.max())
    first = values[0] if before is None else np.broadcast_to(np.asarray(before, float), values.shape[1:])
    padded = np.concatenate([first[None, ...], values])
    out = np.zeros((total,) + values.shape[1:])
    for amp, k in zip(shaper.amplitudes, shifts):
        idx = np.clip(np.arange(total) - k, -1, n - 1) + 1
        out += amp * padded[idx]
    return out


def shape_trajectory(shaper: ImpulseSequence, traj: PlatformTrajectory) -> PlatformTrajectory:
    dt = traj.dt
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two samples")
    if not np.allclose(np.diff(traj.time), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("shape_trajectory needs a uniformly sampled trajectory")
    # a move that starts at rest was at rest before it started
    rest = not np.any(traj.twist[0])
    pose = shape_signal(shaper, traj.pose, dt)
    twist = shape_signal(shaper, traj.twist, dt, 0.0 if rest else None)
    accel = shape_signal(shaper, traj.accel, dt, 0.0 if rest else None)
    t = traj.time[0] + np.arange(pose.shape[0]) * dt
    return PlatformTrajectory(t, pose, twist, accel)


def residual_vibration(shaper: ImpulseSequence, mode: ModeSpec) -> float:
    """Residual amplitude of a second-order mode relative to a unit impulse."""
    w = 2.0 * np.pi * mode.frequency
    z = mode.damping
    wd = w * np.sqrt(1.0 - z * z)
    decay = np.exp(z * w * shaper.times)
    c = np.sum(shaper.amplitudes * decay * np.cos(wd * shaper.times))
    s = np.sum(shaper.amplitudes * decay * np.sin(wd * shaper.times))
    return float(np.exp(-z * w * shaper.duration) * np.hypot(c, s))


def sensitivity_curve(shaper: ImpulseSequence, f_m: float, ratios, damping: float = 0.0) -> np.ndarray:
    """Residual vibration at each normalised frequency ``f / f_m``."""
    return np.array([residual_vibration(shaper, ModeSpec(r * f_m, damping)) for r in np.asarray(ratios, float)])


def insensitivity_band(shaper: ImpulseSequence, f_m: float, level: float = 0.05,
                       damping: float = 0.0, tol: float = 1e-6, step: float = 1e-3) -> tuple[float, float]:
    """Edges ``(r_lo, r_hi)`` of the contiguous band around ``f/f_m = 1`` where
    the residual vibration stays at or below ``level``."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")

    def v(r):
        return residual_vibration(shaper, ModeSpec(r * f_m, damping))

    if v(1.0) > level:
        raise ValueError("shaper is not below the level at its tuning frequency")

    def edge(direction):
        inside = 1.0
        outside = 1.0 + direction * step
        while v(outside) <= level:
            inside = outside
            outside += direction * step
            if outside <= 0.0 or outside > 10.0:
                return max(outside, 0.0)
        while abs(outside - inside) > tol:
            mid = 0.5 * (inside + outside)
            if v(mid) <= level:
                inside = mid
            else:
                outside = mid
        return 0.5 * (inside + outside)

    return edge(-1.0), edge(+1.0)


def insensitivity(shaper: ImpulseSequence, f_m: float, level: float = 0.05, damping: float = 0.0) -> float:
    lo, hi = insensitivity_band(shaper, f_m, level, damping)
    return hi - lo


def family_insensitivity(kind: str, f_m: float = 1.0, level: float = 0.05) -> float:
    """Insensitivity of an undamped single-mode ZV or ZVD shaper tuned at ``f_m``."""
    ctor = {"zv": zv, "zvd": zvd}[kind.lower()]
    return insensitivity(ctor(ModeSpec(f_m)), f_m, level)


def write_sensitivity_csv(path, curves: dict, ratios) -> None:
    """``curves`` maps a shaper label to its vibration fractions at ``ratios``."""
    labels = list(curves)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["normalized_frequency"] + [f"vibration_fraction_{k}" for k in labels])
        for i, r in enumerate(ratios):
            w.writerow([repr(float(r))] + [repr(float(curves[k][i])) for k in labels])
