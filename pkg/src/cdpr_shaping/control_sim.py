"""Feed-forward + PID winch control on a virtual elastic-cable plant, and the
vibration / torque metrics used to compare shapers."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, _plant_py
from .errors import InvalidDuration, NoOscillationDetected, NumericalDivergence, SlackAllCables
from .model import RobotModel, cable_geometry, jacobian, mass_matrix
from .tension import TensionLimits, feedforward_wrench, solve_tensions
from .trajectory import PlatformTrajectory, extend, resample

DIVERGENCE_LIMIT = 1e6
CONTROL_DT = 1e-3

# Hardware results reported for the CREATOR prototype [m/s, N.m, %].
# Reference only: the virtual plant is not expected to reproduce them.
HARDWARE_PEAK_TO_PEAK = {"none": 0.0097, "zv": 0.0061, "zvd": 0.0045, "zvzv": 0.0056, "zvdzvd": 0.0028}
HARDWARE_TORQUE_START = {
    "none": (0.138, 0.272, 0.160),
    "zvzv": (0.134, 0.263, 0.155),
    "zvdzvd": (0.133, 0.261, 0.154),
}
HARDWARE_TORQUE_END = {
    "none": (0.210, 0.385, 0.228),
    "zvzv": (0.200, 0.367, 0.226),
    "zvdzvd": (0.156, 0.298, 0.181),
}
HARDWARE_TORQUE_REDUCTION_START = {"zvzv": (2.89, 3.3, 3.12), "zvdzvd": (3.62, 4.04, 3.75)}
HARDWARE_TORQUE_REDUCTION_END = {"zvzv": (4.76, 4.67, 0.88), "zvdzvd": (25.71, 22.59, 20.61)}


def _per_winch(value, n):
    return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()


@dataclass(frozen=True)
class ControllerGains:
    kp: object = 1125.8
    kd: object = 58.12
    ki: object = 7269.6

    def __post_init__(self):
        for name in ("kp", "kd", "ki"):
            if np.any(np.asarray(getattr(self, name), dtype=float) < 0):
                raise ValueError(f"gain {name} must be non-negative")

    @classmethod
    def zero(cls) -> "ControllerGains":
        return cls(0.0, 0.0, 0.0)

    def arrays(self, n):
        return _per_winch(self.kp, n), _per_winch(self.kd, n), _per_winch(self.ki, n)


@dataclass(frozen=True)
class FrictionParams:
    dry: object = 0.14  # Gamma_s [N.m]
    viscous: object = 0.0  # Gamma_v [N.m.s/rad]

    def __post_init__(self):
        if np.any(np.asarray(self.dry, float) < 0) or np.any(np.asarray(self.viscous, float) < 0):
            raise ValueError("friction coefficients must be non-negative")

    @classmethod
    def none(cls) -> "FrictionParams":
        return cls(0.0, 0.0)


def friction_torque(qdot, fr: FrictionParams, smooth: float | None = None):
    """``dry * sgn(qdot) + viscous * qdot`` with sgn(0) = 0.

    ``smooth`` replaces sgn by ``tanh(qdot / smooth)``.
    """
    qdot = np.asarray(qdot, dtype=float)
    s = np.tanh(qdot / smooth) if smooth else np.sign(qdot)
    return np.asarray(fr.dry, float) * s + np.asarray(fr.viscous, float) * qdot


@dataclass
class PlantState:
    pose: np.ndarray
    twist: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    integral: np.ndarray

    def __post_init__(self):
        for name in ("pose", "twist", "q", "qdot", "integral"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).copy())
        if self.pose.shape != (6,) or self.twist.shape != (6,):
            raise ValueError("pose and twist must have 6 components")
        n = self.q.size
        if self.qdot.shape != (n,) or self.integral.shape != (n,):
            raise ValueError("winch vectors must share one length")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.pose, self.twist, self.q, self.qdot])

    @classmethod
    def from_vector(cls, x, integral) -> "PlantState":
        n = (len(x) - 12) // 2
        return cls(x[:6], x[6:12], x[12:12 + n], x[12 + n:], integral)


@dataclass(frozen=True)
class JointSetpoints:
    q: np.ndarray  # (N, n)
    qdot: np.ndarray
    qddot: np.ndarray


def joint_setpoints(model: RobotModel, traj: PlatformTrajectory) -> JointSetpoints:
    """Winch angle references along ``traj``; the angle is zero at the first sample.

    Positive angles reel cable in, so ``q = -(l - l(0)) / chi``.
    """
    chi = model.winding_ratios
    lengths = np.empty((len(traj), model.n))
    rates = np.empty((len(traj), model.n))
    for k in range(len(traj)):
        g = cable_geometry(model, traj.pose[k])
        lengths[k] = g.lengths
        rates[k] = jacobian(model, traj.pose[k], g) @ traj.twist[k, : model.dof]
    q = -(lengths - lengths[0]) / chi
    qdot = -rates / chi
    if len(traj) > 1:
        qddot = np.gradient(qdot, traj.time, axis=0)
    else:
        qddot = np.zeros_like(qdot)
    return JointSetpoints(q, qdot, qddot)


def control_torque(state: PlantState, q_d, qdot_d, qddot_d, gains: ControllerGains,
                   fr: FrictionParams, gamma_d, winch_inertia, smooth: float | None = None):
    """Torque set-point ``(gamma, gamma_corr, gamma_f)``.

    ``state.integral`` must already hold the accumulated position error.
    """
    n = state.q.size
    kp, kd, ki = gains.arrays(n)
    e = np.asarray(q_d, float) - state.q
    edot = np.asarray(qdot_d, float) - state.qdot
    corr = _per_winch(winch_inertia, n) * (np.asarray(qddot_d, float) + kp * e + kd * edot + ki * state.integral)
    fric = friction_torque(qdot_d, fr, smooth)
    return corr + fric + np.asarray(gamma_d, float), corr, fric


class VirtualPlant:
    """Rigid platform on linear-elastic cables driven by inertial winches.

    Winch ``i`` pays out cable at ``chi_i`` metres per radian; the plant keeps
    the unstretched length ``l0_i = l0ref_i - chi_i * q_i``.  ``spring_rate``
    replaces ``EA / l0`` by a fixed stiffness and disables the slack clamp,
    which turns the cables into ideal springs (used for energy checks).
    """

    def __init__(self, model: RobotModel, friction: FrictionParams | None = None, *,
                 cable_damping=0.0, friction_smoothing: float | None = None,
                 spring_rate=None, kernel: str | None = None):
        if np.any(model.winch_inertia <= 0):
            raise ValueError("simulation needs positive winch inertia")
        self.model = model
        self.friction = friction or FrictionParams.none()
        n = model.n
        M = np.zeros((6, 6))
        M[: model.dof, : model.dof] = mass_matrix(model)
        minv = np.zeros((6, 6))
        minv[: model.dof, : model.dof] = np.linalg.inv(mass_matrix(model))
        d = np.array(model.com_offset, dtype=float)
        # I_ee - m [d]x [d]x  ==  I_ee + m (|d|^2 I - d d^T)
        irot = np.array(model.platform_inertia) + model.platform_mass * (np.dot(d, d) * np.eye(3) - np.outer(d, d))
        self.mass = M
        self.params = {
            "b": np.ascontiguousarray(model.exit_points, dtype=float),
            "a": np.ascontiguousarray(model.anchor_points, dtype=float),
            "chi": np.ascontiguousarray(model.winding_ratios, dtype=float),
            "im": np.ascontiguousarray(model.winch_inertia, dtype=float),
            "l0ref": np.zeros(n),
            "kfix": _per_winch(0.0 if spring_rate is None else spring_rate, n),
            "cdamp": _per_winch(cable_damping, n),
            "gs": _per_winch(self.friction.dry, n),
            "gv": _per_winch(self.friction.viscous, n),
            "vs": float(friction_smoothing or 0.0),
            "minv": np.ascontiguousarray(minv),
            "irot": np.ascontiguousarray(irot),
            "gravity": np.array(model.gravity, dtype=float),
            "d": d,
            "mass": float(model.platform_mass),
            "ea": float(model.axial_stiffness),
            "dof": int(model.dof) if model.dof == 6 else 3,
            "clamp": spring_rate is None,
        }
        if model.dof not in (3, 6):
            raise ValueError("the plant supports 3-dof and 6-dof platforms")
        self._advance = _kernels.get(kernel)

    @property
    def n(self):
        return self.model.n

    def pretension(self, pose, tensions) -> None:
        """Choose rest lengths so the cables carry ``tensions`` at ``pose`` with q = 0."""
        lengths = cable_geometry(self.model, pose).lengths
        tensions = np.asarray(tensions, dtype=float)
        kfix = self.params["kfix"]
        ea = self.params["ea"]
        self.params["l0ref"] = np.where(kfix > 0, lengths - tensions / np.where(kfix > 0, kfix, 1.0),
                                        lengths / (1.0 + tensions / ea))

    def initial_vector(self, pose, twist=None, q=None, qdot=None) -> np.ndarray:
        n = self.n
        pose6 = np.zeros(6)
        p = np.asarray(pose, float).ravel()
        pose6[: p.size] = p
        tw6 = np.zeros(6)
        if twist is not None:
            t = np.asarray(twist, float).ravel()
            tw6[: t.size] = t
        q = np.zeros(n) if q is None else np.asarray(q, float)
        qdot = np.zeros(n) if qdot is None else np.asarray(qdot, float)
        return np.concatenate([pose6, tw6, q, qdot])

    def tensions(self, x) -> np.ndarray:
        return _plant_py.rhs(np.asarray(x, float), np.zeros(self.n), self.params)[1]

    def derivative(self, x, torque) -> np.ndarray:
        return _plant_py.rhs(np.asarray(x, float), np.asarray(torque, float), self.params)[0]

    def advance(self, x: np.ndarray, torque, steps: int, dt: float) -> np.ndarray:
        """RK4 in place; returns the cable tensions at the final state."""
        tau = np.zeros(self.n)
        self._advance(x, np.ascontiguousarray(torque, dtype=float), int(steps), float(dt), self.params, tau)
        return tau

    def energy(self, x) -> float:
        """Kinetic + elastic + gravitational energy (3-dof, spring_rate mode)."""
        p = self.params
        n = self.n
        x = np.asarray(x, float)
        v = x[6:12]
        kinetic = 0.5 * v @ self.mass @ v + 0.5 * np.sum(p["im"] * x[12 + n:] ** 2)
        lengths = cable_geometry(self.model, x[:6]).lengths
        l0 = p["l0ref"] - p["chi"] * x[12:12 + n]
        k = np.where(p["kfix"] > 0, p["kfix"], p["ea"] / l0)
        elastic = 0.5 * np.sum(k * (lengths - l0) ** 2)
        gravitational = -p["mass"] * p["gravity"] @ (x[:3] + p["d"])
        return float(kinetic + elastic + gravitational)


def _trace_columns(n):
    cols = ["t"]
    cols += [f"{k}_d" for k in ("x", "y", "z", "phi", "theta", "psi")]
    cols += [f"{k}_d" for k in ("vx", "vy", "vz", "wx", "wy", "wz")]
    cols += ["x", "y", "z", "phi", "theta", "psi", "vx", "vy", "vz", "wx", "wy", "wz"]
    for name in ("q_d", "q", "tau", "tau_d", "gamma_d", "gamma_f", "gamma_corr", "gamma"):
        cols += [f"{name}{i + 1}" for i in range(n)]
    cols.append("dz_error")
    return cols


@dataclass
class SimulationTrace:
    """Controller-rate records of a closed-loop run (one row per tick)."""

    time: np.ndarray
    pose_d: np.ndarray
    twist_d: np.ndarray
    pose: np.ndarray
    twist: np.ndarray
    q_d: np.ndarray
    q: np.ndarray
    tension: np.ndarray
    tension_d: np.ndarray
    gamma_d: np.ndarray
    gamma_f: np.ndarray
    gamma_corr: np.ndarray
    gamma: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.time.size

    @property
    def dt(self) -> float:
        return float(self.time[1] - self.time[0])

    @property
    def dz_error(self) -> np.ndarray:
        """Nominal minus simulated vertical velocity."""
        return self.twist_d[:, 2] - self.twist[:, 2]

    def columns(self):
        return _trace_columns(self.q.shape[1])

    def as_array(self) -> np.ndarray:
        return np.column_stack([
            self.time, self.pose_d, self.twist_d, self.pose, self.twist, self.q_d, self.q,
            self.tension, self.tension_d, self.gamma_d, self.gamma_f, self.gamma_corr, self.gamma,
            self.dz_error,
        ])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for row in self.as_array():
                w.writerow([repr(float(v)) for v in row])


def simulate(model: RobotModel, gains: ControllerGains, fr: FrictionParams,
             traj: PlatformTrajectory, dt: float = 1e-4, duration: float | None = None, *,
             control_dt: float = CONTROL_DT, limits: TensionLimits | None = None,
             cable_damping=0.0, friction_smoothing: float | None = 0.01,
             feedforward: bool = True, spring_rate=None, kernel: str | None = None) -> SimulationTrace:
    """Closed-loop run tracking the (shaped) trajectory ``traj``.

    The controller runs every ``control_dt`` with zero-order hold; the plant
    is integrated with RK4 at ``dt``.  ``friction_smoothing`` applies the same
    tanh regularisation to the plant friction and its compensation.
    """
    if not 0 < dt <= 1e-3:
        raise ValueError("plant step dt must lie in (0, 1e-3]")
    substeps = control_dt / dt
    nsub = int(round(substeps))
    if nsub < 1 or abs(substeps - nsub) > 1e-9 * substeps:
        raise ValueError("control_dt must be an integer multiple of dt")
    duration = traj.duration if duration is None else float(duration)
    if duration < traj.duration - 1e-12:
        raise InvalidDuration("duration must cover the trajectory")

    ticks = int(round(duration / control_dt))
    desired = resample(extend(traj, duration + control_dt), control_dt)
    desired = PlatformTrajectory(desired.time[: ticks + 1], desired.pose[: ticks + 1],
                                 desired.twist[: ticks + 1], desired.accel[: ticks + 1])
    sp = joint_setpoints(model, desired)
    n = model.n
    limits = limits or TensionLimits()

    tau_d = np.zeros((ticks + 1, n))
    if feedforward:
        for k in range(ticks + 1):
            w_f = feedforward_wrench(model, desired.twist[k, : model.dof], desired.accel[k, : model.dof])
            tau_d[k] = solve_tensions(model, desired.pose[k], w_f, limits).tensions
    gamma_d = model.winding_ratios * tau_d

    plant = VirtualPlant(model, fr, cable_damping=cable_damping, friction_smoothing=friction_smoothing,
                         spring_rate=spring_rate, kernel=kernel)
    if feedforward:
        start_tension = tau_d[0]
    else:
        start_tension = solve_tensions(
            model, desired.pose[0], feedforward_wrench(model, np.zeros(model.dof), np.zeros(model.dof)), limits
        ).tensions
    plant.pretension(desired.pose[0], start_tension)
    x = plant.initial_vector(desired.pose[0], desired.twist[0], qdot=sp.qdot[0])
    integral = np.zeros(n)
    im = model.winch_inertia

    rec = {k: np.zeros((ticks + 1, 6)) for k in ("pose", "twist")}
    for k in ("q", "tension", "gamma_f", "gamma_corr", "gamma"):
        rec[k] = np.zeros((ticks + 1, n))
    tension = plant.tensions(x)
    slack_warned = False
    for k in range(ticks + 1):
        rec["pose"][k] = x[:6]
        rec["twist"][k] = x[6:12]
        rec["q"][k] = x[12:12 + n]
        rec["tension"][k] = tension
        if not slack_warned and np.all(tension <= 0.0):
            warnings.warn(f"all cables slack at t={desired.time[k]:.4f} s", SlackAllCables, stacklevel=2)
            slack_warned = True
        integral = integral + (sp.q[k] - x[12:12 + n]) * control_dt
        state = PlantState.from_vector(x, integral)
        gamma, corr, fric = control_torque(state, sp.q[k], sp.qdot[k], sp.qddot[k], gains, fr,
                                           gamma_d[k], im, friction_smoothing)
        rec["gamma"][k], rec["gamma_corr"][k], rec["gamma_f"][k] = gamma, corr, fric
        if k == ticks:
            break
        tension = plant.advance(x, gamma, nsub, dt)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT:
            raise NumericalDivergence(f"plant state diverged near t={desired.time[k + 1]:.4f} s")

    return SimulationTrace(
        time=desired.time.copy(), pose_d=desired.pose.copy(), twist_d=desired.twist.copy(),
        pose=rec["pose"], twist=rec["twist"], q_d=sp.q, q=rec["q"], tension=rec["tension"],
        tension_d=tau_d, gamma_d=gamma_d, gamma_f=rec["gamma_f"], gamma_corr=rec["gamma_corr"],
        gamma=rec["gamma"], meta={"dt": dt, "control_dt": control_dt, "kernel": _kernels.KERNEL if kernel is None else kernel},
    )


# --- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class PeakToPeak:
    value: float
    window: tuple  # (t_begin, t_end) of the measured period
    detected: bool  # False when no mean crossing was found (whole tail used)


def first_period_peak_to_peak(time, signal, t_start: float, strict: bool = False) -> PeakToPeak:
    """Peak-to-peak of ``signal`` over its first oscillation period after ``t_start``.

    The period spans from the first crossing of the tail mean to the third.
    With fewer than three crossings there is no full period: the whole tail
    is used, or ``strict`` raises instead.
    """
    time = np.asarray(time, float)
    signal = np.asarray(signal, float)
    tail = time >= t_start
    if np.count_nonzero(tail) < 2:
        raise ValueError("signal does not extend past t_start")
    t, y = time[tail], signal[tail]
    s = np.sign(y - y.mean())
    crossings = np.nonzero(s[1:] * s[:-1] < 0)[0]
    if crossings.size < 3:
        if strict:
            raise NoOscillationDetected("no full oscillation period after t_start")
        return PeakToPeak(float(y.max() - y.min()), (float(t[0]), float(t[-1])), False)
    i0 = crossings[0]
    i1 = crossings[2] + 1
    seg = y[i0:i1 + 1]
    return PeakToPeak(float(seg.max() - seg.min()), (float(t[i0]), float(t[i1])), True)


def _sample_at(trace: SimulationTrace, values, t):
    k = int(np.clip(np.rint((t - trace.time[0]) / trace.dt), 0, len(trace) - 1))
    return values[k]


@dataclass(frozen=True)
class MetricsReport:
    peak_to_peak: float
    window: tuple
    oscillation_detected: bool
    tail_rms: float
    torque_start: np.ndarray  # feed-forward torque at t = 0
    torque_end: np.ndarray  # feed-forward torque at t = t_f

    def as_dict(self) -> dict:
        return {
            "peak_to_peak_dz": self.peak_to_peak,
            "period_window_s": list(self.window),
            "oscillation_detected": self.oscillation_detected,
            "tail_rms_dz": self.tail_rms,
            "torque_start": self.torque_start.tolist(),
            "torque_end": self.torque_end.tolist(),
        }


def metrics(trace: SimulationTrace, t_f: float, t_start: float | None = None) -> MetricsReport:
    """Vibration and effort summary.  The oscillation window opens at ``t_start``
    (defaults to ``t_f``)."""
    if trace.time[-1] <= t_f:
        raise ValueError("trace must extend beyond t_f")
    t_start = t_f if t_start is None else t_start
    dz = trace.dz_error
    p2p = first_period_peak_to_peak(trace.time, dz, t_start)
    tail = dz[trace.time >= t_start]
    return MetricsReport(
        peak_to_peak=p2p.value,
        window=p2p.window,
        oscillation_detected=p2p.detected,
        tail_rms=float(np.sqrt(np.mean((tail - tail.mean()) ** 2))),
        torque_start=np.array(_sample_at(trace, trace.gamma_d, trace.time[0])),
        torque_end=np.array(_sample_at(trace, trace.gamma_d, t_f)),
    )


def torque_reduction(reference, shaped) -> np.ndarray:
    """Percent reduction ``100 (ref - shaped) / ref`` per cable."""
    reference = np.asarray(reference, float)
    return 100.0 * (reference - np.asarray(shaped, float)) / reference
