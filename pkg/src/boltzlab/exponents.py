"""Closed-form regularity exponents and the bootstrap sequences behind them.

Everything is a function of ``(nu, gamma)`` only. Inputs may be a
:class:`~boltzlab.kernel.KernelParams` or anything with ``nu`` and ``gamma``
attributes.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

from .errors import DomainError


class Regime(str, enum.Enum):
    NONE = "NONE"
    DENSITY = "DENSITY"
    W1P = "W1P"
    FULL = "FULL"


def density_threshold(gamma):
    return gamma / (2.0 * gamma + 1.0)


def w1p_threshold(gamma):
    return gamma / (3.0 * gamma + 4.0)


def full_threshold(gamma):
    return gamma / (4.0 * gamma + 9.0)


def phi_alpha(alpha, params):
    nu, gamma = params.nu, params.gamma
    if alpha < 0.0:
        raise DomainError("alpha must be non-negative")
    return (1.0 - nu) * (1.0 + gamma + alpha) / (1.0 + nu * (gamma + alpha)) - 1.0


def classify_regime(params):
    nu, gamma = params.nu, params.gamma
    if nu < full_threshold(gamma):
        return Regime.FULL
    if nu < w1p_threshold(gamma):
        return Regime.W1P
    if nu < density_threshold(gamma):
        return Regime.DENSITY
    return Regime.NONE


def alpha_star(params):
    """Positive fixed point of ``phi_alpha``, or None when ``nu > gamma/(2 gamma + 1)``.

    At the boundary itself the closed form returns 0 (up to rounding).
    """
    nu, gamma = params.nu, params.gamma
    if nu > density_threshold(gamma):
        return None
    disc = (gamma + 2.0) ** 2 + 4.0 * (gamma / nu - 2.0 * gamma - 1.0)
    return 0.5 * (-(gamma + 2.0) + math.sqrt(disc))


def fixed_point_iterate(params, tol=1e-14, max_iter=100_000):
    """Iterate ``alpha <- phi(alpha)`` from 0. Independent cross-check of :func:`alpha_star`."""
    a = 0.0
    for _ in range(max_iter):
        nxt = phi_alpha(a, params)
        if abs(nxt - a) < tol:
            return nxt
        a = max(nxt, 0.0)
    return a


def _kappa_increment(nu):
    return 13.0 * (2.0 + nu) / nu


def bootstrap_sequences(params, k_max=64, stop_tol=1e-13):
    """Return ``(alpha_seq, kappa_seq, k_star)`` starting from ``alpha_0 = kappa_0 = 0``.

    Stops early once consecutive alphas differ by less than ``stop_tol``.
    ``k_star`` is the first index with ``alpha_k >= 2`` when ``alpha_* > 2``,
    otherwise None.
    """
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    if not phi_alpha(0.0, params) > 0.0:
        raise DomainError("bootstrap needs phi(0) > 0, i.e. nu < gamma/(2 gamma + 1)")
    inc = _kappa_increment(params.nu)
    alphas, kappas = [0.0], [0.0]
    for _ in range(k_max):
        a = phi_alpha(alphas[-1], params)
        kappas.append(kappas[-1] - 1.0 + inc * (1.0 + a))
        alphas.append(a)
        if abs(a - alphas[-2]) < stop_tol:
            break
    k_star = None
    a_star = alpha_star(params)
    if a_star is not None and a_star > 2.0:
        k_star = next((k for k, a in enumerate(alphas) if a >= 2.0), None)
    return alphas, kappas, k_star


def eta_exponent(params):
    """Blow-up exponent in time; None unless ``phi(2) > 2``."""
    if classify_regime(params) is not Regime.FULL:
        return None
    p2 = phi_alpha(2.0, params)
    if not p2 > 2.0:
        return None
    a_star = alpha_star(params)
    return 2.0 * (p2 - 1.0) / (p2 - 2.0) * (13.0 * (1.0 + a_star) * (2.0 + params.nu) / params.nu - 1.0)


def kappa_exponent(params):
    nu, gamma = params.nu, params.gamma
    if not nu < density_threshold(gamma):
        return None
    return 13.0 * (2.0 + nu) * (1.0 - nu) * (1.0 + gamma) / (nu * (1.0 + nu * gamma)) - 1.0


def sobolev_orders(params):
    """``(p1, p2, chi)`` in the full regime, else None."""
    nu, gamma = params.nu, params.gamma
    if classify_regime(params) is not Regime.FULL:
        return None
    num = 2.0 * (1.0 + nu * (gamma + 2.0))
    p1 = num / (1.0 - gamma + 11.0 * nu + 5.0 * nu * gamma)
    p2 = num / (2.0 - gamma + 13.0 * nu + 6.0 * nu * gamma)
    return p1, p2, 1.0 - 2.0 / p1


def sobolev_orders_via_phi(params):
    """``p_q = 2 / (q + 2 - phi(2))`` for q = 1, 2; the identity behind :func:`sobolev_orders`."""
    p2v = phi_alpha(2.0, params)
    return 2.0 / (3.0 - p2v), 2.0 / (4.0 - p2v)


@dataclass(frozen=True)
class Dim3Mapping:
    s: float
    nu: float
    gamma: float
    density_regime: bool
    full_regime: bool


FULL_S_THRESHOLD = 16.0 + math.sqrt(193.0)


def from_dimension3(s):
    """Map the 3D inverse-power exponent ``s`` to ``(nu, gamma)``."""
    if not s > 5.0:
        raise DomainError("s must exceed 5 (gamma > 0)")
    return Dim3Mapping(
        s=float(s),
        nu=2.0 / (s - 1.0),
        gamma=(s - 5.0) / (s - 1.0),
        density_regime=s > 9.0,
        full_regime=s > FULL_S_THRESHOLD,
    )


@dataclass
class RegimeReport:
    params: dict
    phi0: float
    phi2: float
    alpha_star: float | None
    alpha_seq: list
    kappa_seq: list
    k_star: int | None
    eta: float | None
    kappa: float | None
    p1: float | None
    p2: float | None
    chi: float | None
    regime: Regime
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["regime"] = self.regime.value
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def regime_report(params, k_max=64):
    notes = {}
    regime = classify_regime(params)
    phi0 = phi_alpha(0.0, params)
    a_star = alpha_star(params)
    if a_star is None:
        notes["alpha_star"] = "absent: nu >= gamma/(2 gamma + 1)"
    if phi0 > 0.0:
        alphas, kappas, k_star = bootstrap_sequences(params, k_max=k_max)
    else:
        alphas, kappas, k_star = [], [], None
        notes["sequences"] = "absent: phi(0) <= 0"
    eta = eta_exponent(params)
    if eta is None:
        notes["eta"] = "absent: phi(2) <= 2 (nu >= gamma/(4 gamma + 9))"
    kappa = kappa_exponent(params)
    if kappa is None:
        notes["kappa"] = "absent: nu >= gamma/(2 gamma + 1)"
    orders = sobolev_orders(params)
    if orders is None:
        notes["sobolev"] = "absent: nu >= gamma/(4 gamma + 9)"
        orders = (None, None, None)
    pdict = {"nu": params.nu, "gamma": params.gamma}
    for extra in ("lambda_moment", "lambda_prime"):
        if hasattr(params, extra):
            pdict[extra] = getattr(params, extra)
    return RegimeReport(
        params=pdict,
        phi0=phi0,
        phi2=phi_alpha(2.0, params),
        alpha_star=a_star,
        alpha_seq=alphas,
        kappa_seq=kappas,
        k_star=k_star,
        eta=eta,
        kappa=kappa,
        p1=orders[0],
        p2=orders[1],
        chi=orders[2],
        regime=regime,
        notes=notes,
    )
