"""Pure numpy implementation of the plant integrator.

State layout (length ``12 + 2n``)::

    [p(3), euler(3), v(3), omega(3), q(n), qdot(n)]

``q`` is the winding angle of each winch (positive reels cable in), so the
unstretched length is ``l0ref - chi * q``.  Cable tension is
``k (l - l0) + c (ldot - l0dot)`` with ``k = kfix`` when positive, otherwise
``ea / l0``; it is clamped at zero when ``clamp`` is set.  Winches obey
``im qddot = torque - friction(qdot) - chi * tau``.

Parameter dict keys: b, a, chi, im, l0ref, kfix, cdamp, gs, gv, vs, minv,
irot, gravity, d, mass, ea, dof, clamp.
"""
import numpy as np


def _sgn(v, scale):
    if scale > 0.0:
        return np.tanh(v / scale)
    return np.sign(v)


def _euler(o):
    phi, theta, psi = o
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


def rhs(x, torque, p):
    n = p["b"].shape[0]
    dof = p["dof"]
    pos, o, v, w = x[0:3], x[3:6], x[6:9], x[9:12]
    q, qd = x[12:12 + n], x[12 + n:12 + 2 * n]
    r = p["a"] @ _euler(o).T if dof == 6 else np.zeros((n, 3))
    L = p["b"] - r - pos
    l = np.sqrt(np.sum(L * L, axis=1))
    u = L / l[:, None]
    mom = np.cross(r, u)
    l0 = p["l0ref"] - p["chi"] * q
    l0dot = -p["chi"] * qd
    ldot = -(u @ v)
    if dof == 6:
        ldot = ldot - mom @ w
    k = np.where(p["kfix"] > 0.0, p["kfix"], p["ea"] / l0)
    tau = k * (l - l0) + p["cdamp"] * (ldot - l0dot)
    if p["clamp"]:
        tau = np.maximum(tau, 0.0)
    fric = p["gs"] * _sgn(qd, p["vs"]) + p["gv"] * qd
    qdd = (torque - fric - p["chi"] * tau) / p["im"]

    gf = p["mass"] * p["gravity"]
    dx = np.zeros_like(x)
    dx[0:3] = v
    if dof == 6:
        d = p["d"]
        force = tau @ u + gf - p["mass"] * np.cross(w, np.cross(w, d))
        moment = tau @ mom + np.cross(d, gf) - np.cross(w, p["irot"] @ w)
        acc = p["minv"] @ np.concatenate([force, moment])
        dx[6:12] = acc
        theta, psi = o[1], o[2]
        phid = (np.cos(psi) * w[0] + np.sin(psi) * w[1]) / np.cos(theta)
        dx[3] = phid
        dx[4] = -np.sin(psi) * w[0] + np.cos(psi) * w[1]
        dx[5] = w[2] + np.sin(theta) * phid
    else:
        dx[6:9] = p["minv"][:3, :3] @ (tau @ u + gf)
    dx[12:12 + n] = qd
    dx[12 + n:] = qdd
    return dx, tau


def advance(x, torque, nsub, dt, p, tau_out):
    """Advance ``x`` in place by ``nsub`` RK4 steps of size ``dt``."""
    y = np.array(x, dtype=float)
    torque = np.asarray(torque, dtype=float)
    h = dt
    for _ in range(nsub):
        k1, _ = rhs(y, torque, p)
        k2, _ = rhs(y + 0.5 * h * k1, torque, p)
        k3, _ = rhs(y + 0.5 * h * k2, torque, p)
        k4, _ = rhs(y + h * k3, torque, p)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _, tau = rhs(y, torque, p)
    x[:] = y
    tau_out[:] = tau
