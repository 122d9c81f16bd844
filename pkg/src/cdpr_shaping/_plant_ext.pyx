# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 integrator for the elastic-cable plant.

Mirrors ``_plant_py.advance``; see that module for the state layout and the
meaning of each parameter.
"""
from libc.math cimport sqrt, sin, cos, tanh

DEF NMAX = 32
DEF SMAX = 12 + 2 * NMAX


cdef inline double _sgn(double v, double scale) nogil:
    if scale > 0.0:
        return tanh(v / scale)
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef struct Params:
    int n
    int dof
    int clamp
    double mass
    double vs
    double gx, gy, gz
    double dx, dy, dz


cdef void _rhs(const double* x, double* dx, Params* P,
               const double[:, ::1] b, const double[:, ::1] a,
               const double[::1] chi, const double[::1] im, const double[::1] l0ref,
               const double[::1] kfix, const double ea, const double[::1] cdamp,
               const double[::1] gs, const double[::1] gv, const double[:, ::1] minv,
               const double[:, ::1] irot, const double[::1] torque, double* tau_out) nogil:
    cdef int n = P.n, i, j
    cdef double R[9]
    cdef double ph, th, ps, cf, sf, ct, st, cp, sp
    cdef double rx, ry, rz, Lx, Ly, Lz, l, ux, uy, uz, mx, my, mz
    cdef double l0, l0dot, ldot, k, tau, fric
    cdef double Fx = 0.0, Fy = 0.0, Fz = 0.0, Mx = 0.0, My = 0.0, Mz = 0.0
    cdef double wx = x[9], wy = x[10], wz = x[11]
    cdef double wr[6]
    cdef double acc[6]
    cdef double gfx, gfy, gfz, ix, iy, iz, cx, cy, cz

    if P.dof == 6:
        ph = x[3]; th = x[4]; ps = x[5]
        cf = cos(ph); sf = sin(ph); ct = cos(th); st = sin(th); cp = cos(ps); sp = sin(ps)
        R[0] = cp * ct; R[1] = cp * st * sf - sp * cf; R[2] = cp * st * cf + sp * sf
        R[3] = sp * ct; R[4] = sp * st * sf + cp * cf; R[5] = sp * st * cf - cp * sf
        R[6] = -st;     R[7] = ct * sf;                R[8] = ct * cf

    for i in range(n):
        if P.dof == 6:
            rx = R[0] * a[i, 0] + R[1] * a[i, 1] + R[2] * a[i, 2]
            ry = R[3] * a[i, 0] + R[4] * a[i, 1] + R[5] * a[i, 2]
            rz = R[6] * a[i, 0] + R[7] * a[i, 1] + R[8] * a[i, 2]
        else:
            rx = 0.0; ry = 0.0; rz = 0.0
        Lx = b[i, 0] - rx - x[0]
        Ly = b[i, 1] - ry - x[1]
        Lz = b[i, 2] - rz - x[2]
        l = sqrt(Lx * Lx + Ly * Ly + Lz * Lz)
        ux = Lx / l; uy = Ly / l; uz = Lz / l
        mx = ry * uz - rz * uy
        my = rz * ux - rx * uz
        mz = rx * uy - ry * ux
        l0 = l0ref[i] - chi[i] * x[12 + i]
        l0dot = -chi[i] * x[12 + n + i]
        ldot = -(ux * x[6] + uy * x[7] + uz * x[8])
        if P.dof == 6:
            ldot -= mx * wx + my * wy + mz * wz
        if kfix[i] > 0.0:
            k = kfix[i]
        else:
            k = ea / l0
        tau = k * (l - l0) + cdamp[i] * (ldot - l0dot)
        if P.clamp and tau < 0.0:
            tau = 0.0
        tau_out[i] = tau
        Fx += tau * ux; Fy += tau * uy; Fz += tau * uz
        Mx += tau * mx; My += tau * my; Mz += tau * mz
        fric = gs[i] * _sgn(x[12 + n + i], P.vs) + gv[i] * x[12 + n + i]
        dx[12 + i] = x[12 + n + i]
        dx[12 + n + i] = (torque[i] - fric - chi[i] * tau) / im[i]

    gfx = P.mass * P.gx; gfy = P.mass * P.gy; gfz = P.mass * P.gz
    wr[0] = Fx + gfx; wr[1] = Fy + gfy; wr[2] = Fz + gfz
    for j in range(3):
        dx[j] = x[6 + j]
    if P.dof == 6:
        wr[3] = Mx + P.dy * gfz - P.dz * gfy
        wr[4] = My + P.dz * gfx - P.dx * gfz
        wr[5] = Mz + P.dx * gfy - P.dy * gfx
        # m w x (w x d)
        cx = wy * P.dz - wz * P.dy
        cy = wz * P.dx - wx * P.dz
        cz = wx * P.dy - wy * P.dx
        wr[0] -= P.mass * (wy * cz - wz * cy)
        wr[1] -= P.mass * (wz * cx - wx * cz)
        wr[2] -= P.mass * (wx * cy - wy * cx)
        # w x (Irot w)
        ix = irot[0, 0] * wx + irot[0, 1] * wy + irot[0, 2] * wz
        iy = irot[1, 0] * wx + irot[1, 1] * wy + irot[1, 2] * wz
        iz = irot[2, 0] * wx + irot[2, 1] * wy + irot[2, 2] * wz
        wr[3] -= wy * iz - wz * iy
        wr[4] -= wz * ix - wx * iz
        wr[5] -= wx * iy - wy * ix
        for i in range(6):
            acc[i] = 0.0
            for j in range(6):
                acc[i] += minv[i, j] * wr[j]
        for j in range(6):
            dx[6 + j] = acc[j]
        # Z-Y-X Euler angle rates from the angular velocity
        th = x[4]; ps = x[5]
        ct = cos(th); st = sin(th); cp = cos(ps); sp = sin(ps)
        dx[3] = (cp * wx + sp * wy) / ct
        dx[4] = -sp * wx + cp * wy
        dx[5] = wz + st * dx[3]
    else:
        for i in range(3):
            acc[i] = 0.0
            for j in range(3):
                acc[i] += minv[i, j] * wr[j]
        for j in range(3):
            dx[6 + j] = acc[j]
            dx[3 + j] = 0.0
            dx[9 + j] = 0.0


def advance(double[::1] x, const double[::1] torque, int nsub, double dt, dict p,
            double[::1] tau_out):
    """Advance ``x`` in place by ``nsub`` RK4 steps of size ``dt``."""
    cdef const double[:, ::1] b = p["b"]
    cdef const double[:, ::1] a = p["a"]
    cdef const double[::1] chi = p["chi"]
    cdef const double[::1] im = p["im"]
    cdef const double[::1] l0ref = p["l0ref"]
    cdef const double[::1] kfix = p["kfix"]
    cdef const double[::1] cdamp = p["cdamp"]
    cdef const double[::1] gs = p["gs"]
    cdef const double[::1] gv = p["gv"]
    cdef const double[:, ::1] minv = p["minv"]
    cdef const double[:, ::1] irot = p["irot"]
    cdef const double[::1] grav = p["gravity"]
    cdef const double[::1] d = p["d"]
    cdef double ea = p["ea"]
    cdef Params P
    P.n = b.shape[0]
    P.dof = p["dof"]
    P.clamp = 1 if p["clamp"] else 0
    P.mass = p["mass"]
    P.vs = p["vs"]
    P.gx = grav[0]; P.gy = grav[1]; P.gz = grav[2]
    P.dx = d[0]; P.dy = d[1]; P.dz = d[2]
    if P.n > NMAX:
        raise ValueError("compiled kernel supports at most 32 cables")
    cdef int size = x.shape[0], s, j
    cdef double k1[SMAX]
    cdef double k2[SMAX]
    cdef double k3[SMAX]
    cdef double k4[SMAX]
    cdef double tmp[SMAX]
    cdef double tau[NMAX]
    cdef double h = dt
    with nogil:
        for s in range(nsub):
            _rhs(&x[0], k1, &P, b, a, chi, im, l0ref, kfix, ea, cdamp, gs, gv, minv, irot, torque, tau)
            for j in range(size):
                tmp[j] = x[j] + 0.5 * h * k1[j]
            _rhs(tmp, k2, &P, b, a, chi, im, l0ref, kfix, ea, cdamp, gs, gv, minv, irot, torque, tau)
            for j in range(size):
                tmp[j] = x[j] + 0.5 * h * k2[j]
            _rhs(tmp, k3, &P, b, a, chi, im, l0ref, kfix, ea, cdamp, gs, gv, minv, irot, torque, tau)
            for j in range(size):
                tmp[j] = x[j] + h * k3[j]
            _rhs(tmp, k4, &P, b, a, chi, im, l0ref, kfix, ea, cdamp, gs, gv, minv, irot, torque, tau)
            for j in range(size):
                x[j] = x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        _rhs(&x[0], k1, &P, b, a, chi, im, l0ref, kfix, ea, cdamp, gs, gv, minv, irot, torque, tau)
    for j in range(P.n):
        tau_out[j] = tau[j]
