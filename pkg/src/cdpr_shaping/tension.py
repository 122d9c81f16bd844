"""Feed-forward wrench and cable tension distribution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import SingularWrenchMatrix
from .model import (
    RobotModel,
    Twist,
    _as_twist,
    coriolis_wrench,
    gravity_wrench,
    mass_matrix,
    wrench_matrix,
)

SINGULAR_DET = 1e-12


@dataclass(frozen=True)
class TensionLimits:
    tau_min: float = 1.0
    tau_max: float = 500.0

    def __post_init__(self):
        if self.tau_min < 0 or self.tau_max <= self.tau_min:
            raise ValueError("need 0 <= tau_min < tau_max")


@dataclass(frozen=True)
class TensionSetpoint:
    tensions: np.ndarray
    feasible: bool


def feedforward_wrench(model: RobotModel, twist_d, accel_d, w_ex=None) -> np.ndarray:
    """Wrench ``w_f = w_ex - M tdot_d - C t_d`` the cables must balance
    (``W tau + w_f = 0``); gravity is the default external wrench."""
    if w_ex is None:
        w_ex = gravity_wrench(model)
    accel = np.asarray(accel_d, dtype=float).ravel()[: model.dof]
    return np.asarray(w_ex, float) - mass_matrix(model) @ accel - coriolis_wrench(model, _as_twist(twist_d))


def _within(tau, limits: TensionLimits, tol=1e-9) -> bool:
    return bool(np.all(tau >= limits.tau_min - tol) and np.all(tau <= limits.tau_max + tol))


def _equality_min_norm(W, rhs, fixed_mask, fixed_values):
    """Min-norm tensions with some components pinned, subject to W tau = rhs."""
    free = ~fixed_mask
    tau = np.where(fixed_mask, fixed_values, 0.0)
    r = rhs - W[:, fixed_mask] @ fixed_values[fixed_mask]
    Wf = W[:, free]
    # tau_free = Wf^T (Wf Wf^T)^-1 r via least squares for robustness
    y, *_ = np.linalg.lstsq(Wf @ Wf.T, r, rcond=None)
    tau[free] = Wf.T @ y
    return tau, y


def _bounded_min_norm(W, rhs, limits: TensionLimits, start, max_iter=200):
    """Primal active-set method for ``min |tau|^2 s.t. W tau = rhs, lo <= tau <= hi``.

    ``start`` must be feasible. Each working-set entry pins one tension to a bound.
    """
    n = W.shape[1]
    lo = np.full(n, limits.tau_min)
    hi = np.full(n, limits.tau_max)
    tau = start.copy()
    pinned = np.zeros(n, dtype=bool)
    bound = np.zeros(n)
    # start from the bounds that are already active
    for i in range(n):
        if abs(tau[i] - lo[i]) < 1e-12:
            pinned[i], bound[i] = True, lo[i]
        elif abs(tau[i] - hi[i]) < 1e-12:
            pinned[i], bound[i] = True, hi[i]
    # never pin more variables than leaves the equality system solvable
    for _ in range(max_iter):
        if (~pinned).sum() < W.shape[0]:
            drop = np.flatnonzero(pinned)[-1]
            pinned[drop] = False
            continue
        target, y = _equality_min_norm(W, rhs, pinned, bound)
        step = target - tau
        if np.max(np.abs(step)) < 1e-13:
            # multipliers of pinned bounds: gradient tau + W^T y' ... sign check
            lam = tau + W.T @ (-y)
            # for tau_i at lower bound optimal needs lam_i >= 0, at upper <= 0
            wrong = np.zeros(n, dtype=bool)
            wrong[pinned & (bound == lo)] = lam[pinned & (bound == lo)] < -1e-10
            wrong[pinned & (bound == hi)] = lam[pinned & (bound == hi)] > 1e-10
            if not wrong.any():
                return tau
            worst = np.flatnonzero(wrong)[np.argmax(np.abs(lam[wrong]))]
            pinned[worst] = False
            continue
        # largest feasible fraction of the step
        alpha, block = 1.0, -1
        for i in np.flatnonzero(~pinned):
            if step[i] < 0 and tau[i] + step[i] < lo[i]:
                a = (lo[i] - tau[i]) / step[i]
                if a < alpha:
                    alpha, block, which = a, i, lo[i]
            elif step[i] > 0 and tau[i] + step[i] > hi[i]:
                a = (hi[i] - tau[i]) / step[i]
                if a < alpha:
                    alpha, block, which = a, i, hi[i]
        tau = tau + alpha * step
        if block >= 0:
            tau[block] = which
            pinned[block], bound[block] = True, which
    raise RuntimeError("tension active-set did not converge")


def solve_tensions(model: RobotModel, pose, w_f, limits: TensionLimits | None = None) -> TensionSetpoint:
    """Solve ``W tau + w_f = 0`` for non-negative, bounded cable tensions.

    Square systems are solved directly; redundant ones pick the feasible
    tension vector of minimum 2-norm.  If no vector satisfies the limits the
    unconstrained (least-norm) solution is returned with ``feasible=False``.
    """
    limits = limits or TensionLimits()
    W = wrench_matrix(model, pose)
    rhs = -np.asarray(w_f, dtype=float).ravel()
    m, n = W.shape
    if n == m:
        if abs(np.linalg.det(W)) < SINGULAR_DET:
            raise SingularWrenchMatrix("wrench matrix is singular at this pose")
        tau = np.linalg.solve(W, rhs)
        return TensionSetpoint(tau, _within(tau, limits))

    free = np.linalg.lstsq(W, rhs, rcond=None)[0]
    if _within(free, limits):
        return TensionSetpoint(free, True)
    # phase one: any feasible point
    lp = linprog(
        np.zeros(n), A_eq=W, b_eq=rhs, bounds=[(limits.tau_min, limits.tau_max)] * n,
        method="highs",
    )
    if lp.status != 0:
        return TensionSetpoint(free, False)
    start = np.clip(lp.x, limits.tau_min, limits.tau_max)
    tau = _bounded_min_norm(W, rhs, limits, start)
    # polish the equality residual left by the LP tolerance
    tau, _ = _equality_min_norm(W, rhs, (tau <= limits.tau_min + 1e-12) | (tau >= limits.tau_max - 1e-12), tau)
    return TensionSetpoint(tau, _within(tau, limits))


def static_tensions(model: RobotModel, pose, limits: TensionLimits | None = None) -> TensionSetpoint:
    """Tensions holding the platform at rest under gravity."""
    w_f = feedforward_wrench(model, Twist(np.zeros(3)), np.zeros(model.dof))
    return solve_tensions(model, pose, w_f, limits)
