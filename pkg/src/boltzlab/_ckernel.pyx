# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loops. Arithmetic mirrors ``_pykernel.py`` operation for operation."""

from libc.math cimport sqrt, pow, cos, sin, fabs, M_PI


cdef inline double _phi_eps(double x, double eps, double gamma_eps) noexcept nogil:
    cdef double s, s3, s4
    if x <= eps:
        return 2.0 * eps
    if x < 3.0 * eps:
        s = (x - eps) / (2.0 * eps)
        s4 = s * s * s * s
        return 2.0 * eps + 2.0 * eps * (s4 * (s * (s - 3.0) + 2.5))
    if x <= gamma_eps - 1.0:
        return x
    if x < gamma_eps:
        s = x - (gamma_eps - 1.0)
        s3 = s * s * s
        return (gamma_eps - 1.0) + s - s3 * s * (s * (s - 3.0) + 2.5) + 0.5 * (s3 * (s * (6.0 * s - 15.0) + 10.0))
    return gamma_eps


cdef inline double _cutoff(double z, double g_zeta) noexcept nogil:
    cdef double s = fabs(z) - g_zeta
    if s <= 0.0:
        return 1.0
    if s >= 1.0:
        return 0.0
    return 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0)


cdef inline double _angle(double z, double nu, double half_pi_pow, double neg_inv_nu) noexcept nogil:
    cdef double th = pow(nu * fabs(z) + half_pi_pow, neg_inv_nu)
    if z < 0.0:
        return -th
    return th


cdef inline void _jump(double[:, ::1] vel, double[::1] rmax, Py_ssize_t i, Py_ssize_t j,
                       double dx, double dy, double w, double th, int symmetric) noexcept nogil:
    cdef double c = cos(th)
    cdef double s = sin(th)
    cdef double ax = w * (0.5 * ((c - 1.0) * dx - s * dy))
    cdef double ay = w * (0.5 * (s * dx + (c - 1.0) * dy))
    cdef double sp
    vel[i, 0] += ax
    vel[i, 1] += ay
    sp = sqrt(vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1])
    if sp > rmax[i]:
        rmax[i] = sp
    if symmetric:
        vel[j, 0] -= ax
        vel[j, 1] -= ay
        sp = sqrt(vel[j, 0] * vel[j, 0] + vel[j, 1] * vel[j, 1])
        if sp > rmax[j]:
            rmax[j] = sp


def fictive_events(double[:, ::1] vel, double[::1] rmax, const long long[::1] particle,
                   const long long[::1] partner, const double[::1] z, const double[::1] u,
                   double eps, double gamma_eps, double gamma, double nu, double g_zeta,
                   int symmetric=0):
    cdef Py_ssize_t k, i, j, n = particle.shape[0]
    cdef double dx, dy, r, w
    cdef double half_pi_pow = pow(0.5 * M_PI, -nu)
    cdef double neg_inv_nu = -1.0 / nu
    cdef long long accepted = 0
    with nogil:
        for k in range(n):
            i = particle[k]
            j = partner[k]
            dx = vel[i, 0] - vel[j, 0]
            dy = vel[i, 1] - vel[j, 1]
            r = sqrt(dx * dx + dy * dy)
            if u[k] > pow(_phi_eps(r, eps, gamma_eps), gamma):
                continue
            accepted += 1
            w = _cutoff(z[k], g_zeta)
            if w == 0.0:
                continue
            _jump(vel, rmax, i, j, dx, dy, w, _angle(z[k], nu, half_pi_pow, neg_inv_nu), symmetric)
    return accepted


def real_events(double[:, ::1] vel, double[::1] rmax, const long long[::1] particle,
                const long long[::1] partner, const double[::1] uacc, const double[::1] zpool,
                double eps, double gamma_eps, double gamma, double nu, double g_zeta,
                double u_max, int symmetric=0):
    cdef Py_ssize_t k, i, j, n = particle.shape[0]
    cdef Py_ssize_t zi = 0
    cdef double dx, dy, r, w, zk
    cdef double half_pi_pow = pow(0.5 * M_PI, -nu)
    cdef double neg_inv_nu = -1.0 / nu
    with nogil:
        for k in range(n):
            i = particle[k]
            j = partner[k]
            dx = vel[i, 0] - vel[j, 0]
            dy = vel[i, 1] - vel[j, 1]
            r = sqrt(dx * dx + dy * dy)
            if uacc[k] > pow(_phi_eps(r, eps, gamma_eps), gamma) / u_max:
                continue
            zk = zpool[zi]
            zi += 1
            w = _cutoff(zk, g_zeta)
            if w == 0.0:
                continue
            _jump(vel, rmax, i, j, dx, dy, w, _angle(zk, nu, half_pi_pow, neg_inv_nu), symmetric)
    return zi, zi
