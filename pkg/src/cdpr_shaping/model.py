"""Geometry, kinematics, rigid-body terms, stiffness and modal analysis of a CDPR.

Conventions
-----------
* ``u_i`` is the unit vector of cable ``i`` pointing from the platform anchor
  ``A_i`` to the exit point ``B_i``; ``l_i = b_i - R(o) a_i - p``.
* The Jacobian is built so that ``ldot = A @ t`` holds exactly, which makes
  its rows ``-[u_i, (R a_i) x u_i]``.  The wrench matrix ``W = -A.T`` then
  has columns ``[u_i, (R a_i) x u_i]``: the wrench a unit tension exerts on
  the platform.
* Orientation uses Z-Y-X Euler angles ``(phi, theta, psi)``:
  ``R = Rz(psi) @ Ry(theta) @ Rx(phi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .errors import DegenerateCable, SingularMass

DEGENERATE_LENGTH = 1e-9
MASS_CONDITION_LIMIT = 1e12
GRAVITY = (0.0, 0.0, -9.81)


def skew(v) -> np.ndarray:
    """Cross-product matrix: ``skew(v) @ w == np.cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def euler_zyx(orientation) -> np.ndarray:
    """Rotation matrix for Z-Y-X Euler angles ``(phi, theta, psi)``."""
    phi, theta, psi = orientation
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array(
        [
            [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
            [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
            [-st, ct * sf, ct * cf],
        ]
    )


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        o = np.asarray(self.orientation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(o))):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", o)

    @classmethod
    def from_vector(cls, x) -> "Pose":
        x = np.asarray(x, dtype=float).ravel()
        if not 1 <= x.size <= 6:
            raise ValueError(f"pose vector must have 1 to 6 entries, got {x.size}")
        full = np.zeros(6)
        full[: x.size] = x  # missing components are zero
        return cls(full[:3], full[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.orientation])


@dataclass(frozen=True)
class Twist:
    linear: np.ndarray
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        v = np.asarray(self.linear, dtype=float).reshape(3)
        w = np.asarray(self.angular, dtype=float).reshape(3)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("twist components must be finite")
        object.__setattr__(self, "linear", v)
        object.__setattr__(self, "angular", w)

    @classmethod
    def from_vector(cls, t) -> "Twist":
        t = np.asarray(t, dtype=float).ravel()
        if not 1 <= t.size <= 6:
            raise ValueError(f"twist vector must have 1 to 6 entries, got {t.size}")
        full = np.zeros(6)
        full[: t.size] = t  # missing components are zero
        return cls(full[:3], full[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


def _as_pose(pose) -> Pose:
    return pose if isinstance(pose, Pose) else Pose.from_vector(pose)


def _as_twist(twist) -> Twist:
    return twist if isinstance(twist, Twist) else Twist.from_vector(twist)


@dataclass(frozen=True)
class CableGeometry:
    """Per-cable vectors ``l_i``, lengths and unit vectors (rows)."""

    vectors: np.ndarray
    lengths: np.ndarray
    units: np.ndarray
    anchors_world: np.ndarray  # R(o) a_i


@dataclass(frozen=True)
class RobotModel:
    """Single source of truth for the robot parameters (SI units).

    ``effective_ea`` overrides ``cable_modulus * cable_area`` when given; the
    identified cable modulus is far stiffer than what the measured natural
    frequencies imply, so a calibrated axial stiffness is normally used.
    """

    exit_points: np.ndarray
    anchor_points: np.ndarray
    platform_mass: float
    platform_inertia: np.ndarray
    com_offset: np.ndarray
    cable_modulus: float
    cable_area: float
    winding_ratios: np.ndarray
    winch_inertia: np.ndarray
    dof: int = 3
    gravity: np.ndarray = field(default_factory=lambda: np.array(GRAVITY))
    effective_ea: float | None = None

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.exit_points, dtype=float))
        n = b.shape[0]
        a = self.anchor_points
        a = np.zeros((n, 3)) if a is None else np.atleast_2d(np.asarray(a, dtype=float))
        chi = np.broadcast_to(np.asarray(self.winding_ratios, dtype=float), (n,)).copy()
        im = np.broadcast_to(np.asarray(self.winch_inertia, dtype=float), (n,)).copy()
        inertia = np.asarray(self.platform_inertia, dtype=float).reshape(3, 3)
        d = np.asarray(self.com_offset, dtype=float).reshape(3)
        g = np.asarray(self.gravity, dtype=float).reshape(3)
        dof = int(self.dof)

        if b.shape != (n, 3) or a.shape != (n, 3):
            raise ValueError("exit_points and anchor_points must both be n x 3")
        if not 1 <= dof <= 6 or n < dof:
            raise ValueError(f"need n >= dof >= 1, got n={n}, dof={dof}")
        if np.any(chi <= 0):
            raise ValueError("winding ratios must be positive")
        if self.platform_mass <= 0:
            raise ValueError("platform mass must be positive")
        if np.any(im < 0):
            raise ValueError("winch inertia must be non-negative")
        if not np.allclose(inertia, inertia.T):
            raise ValueError("platform inertia must be symmetric")
        if np.linalg.eigvalsh(inertia).min() < -1e-12:
            raise ValueError("platform inertia must be positive semidefinite")
        if dof == 3 and (np.any(a != 0.0) or np.any(d != 0.0)):
            raise ValueError("a 3-dof point-mass model needs zero anchors and zero com offset")

        for name, value in [
            ("exit_points", b), ("anchor_points", a), ("winding_ratios", chi),
            ("winch_inertia", im), ("platform_inertia", inertia), ("com_offset", d),
            ("gravity", g),
        ]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "dof", dof)
        object.__setattr__(self, "platform_mass", float(self.platform_mass))
        if self.axial_stiffness <= 0:
            raise ValueError("axial stiffness E*A must be positive")

    @property
    def n(self) -> int:
        return self.exit_points.shape[0]

    @property
    def axial_stiffness(self) -> float:
        """E*A actually used by the stiffness model [N]."""
        if self.effective_ea is not None:
            return float(self.effective_ea)
        return float(self.cable_modulus * self.cable_area)

    def with_effective_ea(self, ea: float | None) -> "RobotModel":
        return replace(self, effective_ea=ea)

    def with_cable_order(self, order) -> "RobotModel":
        """Same robot with cables relabelled in ``order``."""
        order = np.asarray(order)
        return replace(
            self,
            exit_points=self.exit_points[order],
            anchor_points=self.anchor_points[order],
            winding_ratios=self.winding_ratios[order],
            winch_inertia=self.winch_inertia[order],
        )


def cable_geometry(model: RobotModel, pose) -> CableGeometry:
    pose = _as_pose(pose)
    if model.dof == 3:
        anchors = model.anchor_points.copy()
    else:
        anchors = model.anchor_points @ euler_zyx(pose.orientation).T
    vectors = model.exit_points - anchors - pose.position
    lengths = np.linalg.norm(vectors, axis=1)
    if np.any(lengths < DEGENERATE_LENGTH):
        i = int(np.argmin(lengths))
        raise DegenerateCable(f"cable {i} has length {lengths[i]:.3g} m")
    return CableGeometry(vectors, lengths, vectors / lengths[:, None], anchors)


def jacobian(model: RobotModel, pose, geometry: CableGeometry | None = None) -> np.ndarray:
    """n x m matrix mapping the platform twist to cable length rates."""
    g = geometry if geometry is not None else cable_geometry(model, pose)
    rows = np.hstack([g.units, np.cross(g.anchors_world, g.units)])
    return -rows[:, : model.dof]


def wrench_matrix(model: RobotModel, pose, geometry: CableGeometry | None = None) -> np.ndarray:
    return -jacobian(model, pose, geometry).T


def _full_mass_matrix(model: RobotModel) -> np.ndarray:
    m = model.platform_mass
    dx = skew(model.com_offset)
    M = np.empty((6, 6))
    M[:3, :3] = m * np.eye(3)
    M[:3, 3:] = -m * dx
    M[3:, :3] = m * dx
    M[3:, 3:] = model.platform_inertia - m * dx @ dx
    return M


def mass_matrix(model: RobotModel) -> np.ndarray:
    k = model.dof
    return _full_mass_matrix(model)[:k, :k]


def coriolis_wrench(model: RobotModel, twist) -> np.ndarray:
    """Coriolis/centrifugal wrench ``C t`` for the given twist."""
    tw = _as_twist(twist)
    m = model.platform_mass
    w, d = tw.angular, model.com_offset
    if model.dof <= 3 or not np.any(w):
        return np.zeros(model.dof)
    force = m * np.cross(w, np.cross(w, d))
    rot_inertia = model.platform_inertia - m * skew(d) @ skew(d)
    moment = np.cross(w, rot_inertia @ w)
    return np.concatenate([force, moment])[: model.dof]


def gravity_wrench(model: RobotModel) -> np.ndarray:
    """External wrench of gravity acting at the mass center, about P."""
    f = model.platform_mass * model.gravity
    return np.concatenate([f, np.cross(model.com_offset, f)])[: model.dof]


def stiffness_matrix(model: RobotModel, pose, geometry: CableGeometry | None = None) -> np.ndarray:
    g = geometry if geometry is not None else cable_geometry(model, pose)
    A = jacobian(model, pose, g)
    k = model.axial_stiffness / g.lengths
    K = A.T @ (k[:, None] * A)
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class ModalResult:
    frequencies: np.ndarray  # [Hz], ascending
    mode_shapes: np.ndarray  # columns, M-normalised

    def as_dict(self) -> dict:
        return {
            "frequencies_hz": self.frequencies.tolist(),
            "mode_shapes": self.mode_shapes.tolist(),
        }


def _check_mass(M: np.ndarray) -> None:
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > MASS_CONDITION_LIMIT:
        raise SingularMass("generalized mass matrix is singular")


def modal_analysis(model: RobotModel, pose) -> ModalResult:
    """Undamped natural frequencies and mode shapes of ``M dx'' + K_x dx = 0``."""
    M = mass_matrix(model)
    _check_mass(M)
    K = stiffness_matrix(model, pose)
    lam, vecs = linalg.eigh(K, M)
    lam = np.clip(lam, 0.0, None)
    return ModalResult(np.sqrt(lam) / (2.0 * np.pi), vecs)


def natural_frequencies(model: RobotModel, pose) -> np.ndarray:
    return modal_analysis(model, pose).frequencies


def calibrate_effective_ea(model: RobotModel, pose, targets) -> float:
    """Axial stiffness E*A that best matches ``targets`` [Hz] in least squares.

    Frequencies scale with sqrt(E*A), so the fit is closed form.
    """
    targets = np.asarray(targets, dtype=float)
    unit = natural_frequencies(model.with_effective_ea(1.0), pose)[: targets.size]
    scale = float(unit @ targets / (unit @ unit))
    return scale**2
