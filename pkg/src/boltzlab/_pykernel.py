"""Pure-Python event loops.

Reference fallback for the Cython core in ``_ckernel.pyx``. Both files must
perform the same floating-point operations in the same order: the backend
parity tests compare trajectories bit for bit.
"""

import math


def _phi_eps(x, eps, gamma_eps):
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


def _cutoff(z, g_zeta):
    s = abs(z) - g_zeta
    if s <= 0.0:
        return 1.0
    if s >= 1.0:
        return 0.0
    return 1.0 - s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def _angle(z, nu, half_pi_pow, neg_inv_nu):
    th = (nu * abs(z) + half_pi_pow) ** neg_inv_nu
    return -th if z < 0.0 else th


def _jump(vel, rmax, i, j, dx, dy, w, th, symmetric):
    c = math.cos(th)
    s = math.sin(th)
    ax = w * (0.5 * ((c - 1.0) * dx - s * dy))
    ay = w * (0.5 * (s * dx + (c - 1.0) * dy))
    vi = vel[i]
    vi[0] += ax
    vi[1] += ay
    sp = math.sqrt(vi[0] * vi[0] + vi[1] * vi[1])
    if sp > rmax[i]:
        rmax[i] = sp
    if symmetric:
        vj = vel[j]
        vj[0] -= ax
        vj[1] -= ay
        sp = math.sqrt(vj[0] * vj[0] + vj[1] * vj[1])
        if sp > rmax[j]:
            rmax[j] = sp


def fictive_events(vel, rmax, particle, partner, z, u, eps, gamma_eps, gamma, nu, g_zeta, symmetric=0):
    """Apply candidate events with thinning indicator ``u <= phi_eps(|V_i - V_j|)^gamma``.

    ``vel`` (n, 2) and ``rmax`` (n,) are updated in place. Returns the number
    of candidates that passed the thinning test.
    """
    v = vel.tolist()
    rm = rmax.tolist()
    half_pi_pow = (0.5 * math.pi) ** -nu
    neg_inv_nu = -1.0 / nu
    accepted = 0
    for i, j, zk, uk in zip(particle.tolist(), partner.tolist(), z.tolist(), u.tolist()):
        vi = v[i]
        vj = v[j]
        dx = vi[0] - vj[0]
        dy = vi[1] - vj[1]
        r = math.sqrt(dx * dx + dy * dy)
        if uk > _phi_eps(r, eps, gamma_eps) ** gamma:
            continue
        accepted += 1
        w = _cutoff(zk, g_zeta)
        if w == 0.0:
            continue
        _jump(v, rm, i, j, dx, dy, w, _angle(zk, nu, half_pi_pow, neg_inv_nu), symmetric)
    vel[:] = v
    rmax[:] = rm
    return accepted


def real_events(vel, rmax, particle, partner, uacc, zpool, eps, gamma_eps, gamma, nu, g_zeta, u_max, symmetric=0):
    """Apply arrivals in the real-shock form.

    Each arrival is non-cemetery with probability ``phi_eps^gamma / u_max``
    (``uacc`` is standard uniform). Only non-cemetery arrivals draw a mass
    coordinate, taken in order from ``zpool``; the jump then has no indicator.
    Returns ``(accepted, z_used)``; the two counts are equal.
    """
    v = vel.tolist()
    rm = rmax.tolist()
    zp = zpool.tolist()
    half_pi_pow = (0.5 * math.pi) ** -nu
    neg_inv_nu = -1.0 / nu
    zi = 0
    for i, j, uk in zip(particle.tolist(), partner.tolist(), uacc.tolist()):
        vi = v[i]
        vj = v[j]
        dx = vi[0] - vj[0]
        dy = vi[1] - vj[1]
        r = math.sqrt(dx * dx + dy * dy)
        if uk > _phi_eps(r, eps, gamma_eps) ** gamma / u_max:
            continue
        zk = zp[zi]
        zi += 1
        w = _cutoff(zk, g_zeta)
        if w == 0.0:
            continue
        _jump(v, rm, i, j, dx, dy, w, _angle(zk, nu, half_pi_pow, neg_inv_nu), symmetric)
    vel[:] = v
    rmax[:] = rm
    return zi, zi
