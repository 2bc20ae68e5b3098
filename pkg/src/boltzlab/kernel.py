"""Deterministic collision-kernel mathematics.

The angular cross-section is the canonical representative
``b(theta) = |theta|^-(1+nu)`` on ``[-pi/2, pi/2] \\ {0}``. With that choice the
tail mass ``G`` and its inverse ``g`` are closed-form, which is what makes
the compound Poisson simulation exact.

Every function here is pure. The scalar kernels used inside the event loop
are reimplemented in :mod:`boltzlab._pykernel` and the Cython core; the
versions below accept numpy arrays and are the reference for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError

HALF_PI = 0.5 * math.pi


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def smoothstep5(s):
    """Quintic smoothstep on [0, 1]; zero first and second derivative at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def _smoothstep5_antideriv(s):
    # integral of smoothstep5 from 0 to s, s in [0, 1]; equals 1/2 at s = 1
    return s ** 4 * (s * (s - 3.0) + 2.5)


@dataclass(frozen=True)
class KernelParams:
    nu: float
    gamma: float
    lambda_moment: float
    lambda_prime: float

    def __post_init__(self):
        if not 0.0 < self.nu < 0.5:
            raise ConfigError("must satisfy 0 < nu < 1/2", key="nu")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("must satisfy 0 < gamma <= 1", key="gamma")
        if not self.gamma < self.lambda_moment < 2.0:
            raise ConfigError("must satisfy gamma < lambda < 2", key="lambda")
        if not 0.0 < self.lambda_prime < self.lambda_moment:
            raise ConfigError("must satisfy 0 < lambda' < lambda", key="lambda_prime")

    @classmethod
    def with_defaults(cls, nu, gamma, lambda_moment=None, lambda_prime=None):
        """Fill the moment exponents when the caller only cares about (nu, gamma).

        ``lambda`` defaults to the midpoint of (gamma, 2) and ``lambda'`` to
        ``min(1, 0.9 lambda)``.
        """
        if lambda_moment is None:
            lambda_moment = 0.5 * (gamma + 2.0)
        if lambda_prime is None:
            lambda_prime = min(1.0, 0.9 * lambda_moment)
        return cls(nu, gamma, lambda_moment, lambda_prime)

    def eta0_bounds(self):
        return 1.0 / self.lambda_moment, 1.0 / max(self.gamma, self.nu)

    def default_eta0(self):
        lo, hi = self.eta0_bounds()
        return 0.5 * (lo + hi)


def gamma_eps_of(epsilon, eta0):
    """Truncation level ``(ln 1/eps)^eta0``."""
    if not 0.0 < epsilon < math.exp(-1.0):
        raise ConfigError(
            f"epsilon={epsilon!r} must lie in (0, 1/e) so that ln(1/epsilon) > 1",
            key="epsilon",
        )
    return math.log(1.0 / epsilon) ** eta0


@dataclass(frozen=True)
class CutoffSchedule:
    """Regularization scales of one simulation variant.

    Build with :meth:`build`; the derived fields are filled there.
    """

    epsilon: float
    zeta: float
    eta0: float
    gamma_eps: float = field(default=0.0)
    rate: float = field(default=0.0)
    molli_var_coeff: float = field(default=0.0)
    g_zeta: float = field(default=0.0)
    u_max: float = field(default=0.0)

    @classmethod
    def build(cls, params: KernelParams, epsilon, zeta, eta0=None):
        if eta0 is None:
            eta0 = params.default_eta0()
        lo, hi = params.eta0_bounds()
        if not lo < eta0 < hi:
            raise ConfigError(
                f"eta0={eta0!r} must lie in (1/lambda, 1/(gamma v nu)) = ({lo:.6g}, {hi:.6g})",
                key="eta0",
            )
        if not 0.0 < zeta < HALF_PI:
            raise ConfigError("must satisfy 0 < zeta < pi/2", key="zeta")
        gamma_eps = gamma_eps_of(epsilon, eta0)
        if gamma_eps - 1.0 <= 3.0 * epsilon:
            raise ConfigError(
                f"truncation window empty: Gamma_eps - 1 = {gamma_eps - 1.0:.6g} <= 3 epsilon",
                key="epsilon",
            )
        g_zeta = float(G_tail(zeta, params.nu))
        rate = 4.0 * (g_zeta + 1.0) * gamma_eps ** params.gamma
        return cls(
            epsilon=float(epsilon),
            zeta=float(zeta),
            eta0=float(eta0),
            gamma_eps=gamma_eps,
            rate=rate,
            molli_var_coeff=zeta ** (4.0 + params.nu),
            g_zeta=g_zeta,
            u_max=2.0 * gamma_eps ** params.gamma,
        )

    @property
    def z_half_width(self):
        """Half-width of the uniform mass coordinate range, ``G(zeta) + 1``."""
        return self.g_zeta + 1.0


def zeta_alpha(epsilon, gamma, nu, alpha):
    """Angular cutoff that balances the two coupling errors at level ``alpha``."""
    return epsilon ** ((1.0 + gamma + alpha) / (1.0 - nu))


def b_density(theta, nu):
    theta = np.asarray(theta, dtype=float)
    a = np.abs(theta)
    if np.any(a == 0.0) or np.any(a > HALF_PI):
        raise DomainError("theta must lie in [-pi/2, pi/2] \\ {0}")
    return _out(a ** -(1.0 + nu))


def G_tail(x, nu):
    """Mass of ``b`` on ``[x, pi/2]``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x > HALF_PI):
        raise DomainError("x must lie in (0, pi/2]")
    return _out((x ** -nu - HALF_PI ** -nu) / nu)


def g_inverse(z, nu):
    """Inverse of :func:`G_tail`, extended to negative ``z`` as an odd function.

    ``z = 0`` maps to ``pi/2``.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError("z must be finite")
    a = np.abs(z)
    theta = (nu * a + HALF_PI ** -nu) ** (-1.0 / nu)
    return _out(np.where(z < 0.0, -theta, theta))


def smooth_angle_cutoff(z, zeta, nu):
    """Smooth surrogate of the indicator of large angles, in mass coordinates.

    Equals 1 for ``|z| <= G(zeta)`` and 0 for ``|z| >= G(zeta) + 1``.
    """
    if not 0.0 < zeta < HALF_PI:
        raise DomainError("zeta must lie in (0, pi/2)")
    gz = G_tail(zeta, nu)
    return _cutoff_from_gz(z, gz)


def _cutoff_from_gz(z, gz):
    s = np.abs(np.asarray(z, dtype=float)) - gz
    return _out(1.0 - smoothstep5(s))


def phi_eps(x, epsilon, gamma_eps):
    """C^2 clamp of the speed to ``[2 eps, Gamma_eps]``.

    Identity on ``[3 eps, Gamma_eps - 1]``, constant ``2 eps`` below ``eps``
    and constant ``Gamma_eps`` above ``Gamma_eps``. The two joins integrate a
    smoothstep-shaped slope, so the result is monotone.
    """
    if gamma_eps - 1.0 <= 3.0 * epsilon:
        raise ConfigError("truncation window empty: Gamma_eps - 1 <= 3 epsilon", key="epsilon")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise DomainError("speed must be non-negative")
    lo = (x - epsilon) / (2.0 * epsilon)
    low_join = 2.0 * epsilon + 2.0 * epsilon * _smoothstep5_antideriv(np.clip(lo, 0.0, 1.0))
    hi = np.clip(x - (gamma_eps - 1.0), 0.0, 1.0)
    high_join = (gamma_eps - 1.0) + hi - _smoothstep5_antideriv(hi) + 0.5 * smoothstep5(hi)
    out = np.where(
        x <= epsilon,
        2.0 * epsilon,
        np.where(
            x < 3.0 * epsilon,
            low_join,
            np.where(x <= gamma_eps - 1.0, x, np.where(x < gamma_eps, high_join, gamma_eps)),
        ),
    )
    return _out(out)


def deflection_matrix(theta):
    """``(R_theta - I) / 2``."""
    if abs(theta) > HALF_PI:
        raise DomainError("|theta| must be <= pi/2")
    c, s = math.cos(theta), math.sin(theta)
    return 0.5 * np.array([[c - 1.0, -s], [s, c - 1.0]])


def collide(v, v_star, theta):
    """Post-collision velocities for deflection angle ``theta``."""
    if abs(theta) > HALF_PI:
        raise DomainError("|theta| must be <= pi/2")
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    mid = 0.5 * (v + v_star)
    half = 0.5 * (v - v_star)
    rot = np.array([c * half[0] - s * half[1], s * half[0] + c * half[1]])
    return mid + rot, mid - rot


def _rho_bridge(u):
    # rho(u) = 1 on [0, 1], u on [2, inf); C^2 monotone join on (1, 2)
    s = np.clip(u - 1.0, 0.0, 1.0)
    join = 1.0 + _smoothstep5_antideriv(s) + 0.5 * smoothstep5(s)
    return np.where(u <= 1.0, 1.0, np.where(u >= 2.0, u, join))


def weight_phi_lambda(v, lambda_prime):
    """Moment weight ``exp(rho(|v|^lambda'))``.

    Equals ``exp(|v|^lambda')`` once ``|v|^lambda' >= 2``, which for
    ``lambda' >= 1`` covers every ``|v| >= 2``.

    ``v`` may be a single planar vector or an ``(n, 2)`` array.
    """
    if not 0.0 < lambda_prime < 2.0:
        raise DomainError("lambda' must lie in (0, 2)")
    v = np.asarray(v, dtype=float)
    r = np.sqrt(np.sum(v * v, axis=-1))
    return _out(np.exp(_rho_bridge(r ** lambda_prime)))


def confinement_weight(running_max, gamma_eps):
    """Smooth weight between the indicators ``sup|V| <= Gamma - 1`` and ``sup|V| <= Gamma``."""
    m = np.asarray(running_max, dtype=float)
    if np.any(m < 0.0):
        raise DomainError("running maximum must be non-negative")
    return _out(1.0 - smoothstep5(m - (gamma_eps - 1.0)))
