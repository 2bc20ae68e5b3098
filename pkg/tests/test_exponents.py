import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import optimize

from boltzlab import exponents as ex
from boltzlab.errors import DomainError
from boltzlab.kernel import KernelParams


def P(nu, gamma):
    return KernelParams.with_defaults(nu, gamma)


def brent_alpha_star(p):
    """Positive root of phi(a) = a by bracketing; independent of the closed form."""
    f = lambda a: ex.phi_alpha(a, p) - a
    return optimize.brentq(f, 0.0, 1e6, xtol=1e-15, rtol=1e-15)


GRID = [(float(g), float(n)) for g in np.linspace(0.02, 1.0, 50) for n in np.linspace(0.005, 0.495, 50)]


def grid_in(regimes):
    return [(g, n) for g, n in GRID if ex.classify_regime(P(n, g)) in regimes]


def test_phi_alpha_examples():
    assert ex.phi_alpha(0.0, P(0.1, 1.0)) == pytest.approx(1.8 / 1.1 - 1.0, abs=1e-15)
    assert ex.phi_alpha(2.0, P(0.05, 1.0)) == pytest.approx(3.8 / 1.15 - 1.0, abs=1e-15)
    assert ex.phi_alpha(2.0, P(0.05, 1.0)) == pytest.approx(2.304348, abs=1e-6)
    g = 0.6
    assert ex.phi_alpha(0.0, P(g / (2 * g + 1), g)) == pytest.approx(0.0, abs=1e-15)


def test_phi_alpha_rejects_negative():
    with pytest.raises(DomainError):
        ex.phi_alpha(-0.1, P(0.1, 1.0))


@pytest.mark.parametrize("nu,expected", [(0.1, (-3 + math.sqrt(37)) / 2), (0.05, (-3 + math.sqrt(77)) / 2)])
def test_alpha_star_examples(nu, expected):
    p = P(nu, 1.0)
    assert ex.alpha_star(p) == pytest.approx(expected, abs=1e-14)
    assert ex.alpha_star(p) == pytest.approx(brent_alpha_star(p), abs=1e-12)
    assert ex.fixed_point_iterate(p) == pytest.approx(expected, abs=1e-12)


def test_alpha_star_boundary_and_absent():
    g = 1.0
    assert ex.alpha_star(P(g / (2 * g + 1), g)) == pytest.approx(0.0, abs=1e-7)
    assert ex.alpha_star(P(0.4, 1.0)) is None


def test_fixed_point_consistency_grid():
    pts = grid_in({ex.Regime.DENSITY, ex.Regime.W1P, ex.Regime.FULL})
    assert len(pts) > 500
    worst = max(abs(ex.alpha_star(P(n, g)) - ex.fixed_point_iterate(P(n, g))) for g, n in pts)
    assert worst <= 1e-10


def test_alpha_star_against_brent_on_grid():
    for g, n in grid_in({ex.Regime.DENSITY, ex.Regime.W1P, ex.Regime.FULL})[::7]:
        p = P(n, g)
        assert ex.alpha_star(p) == pytest.approx(brent_alpha_star(p), rel=1e-10, abs=1e-12)


def test_bootstrap_examples():
    p = P(0.1, 1.0)
    alphas, kappas, k_star = ex.bootstrap_sequences(p, k_max=64)
    assert alphas[0] == 0.0 and kappas[0] == 0.0
    assert alphas[1] == pytest.approx(0.636364, abs=1e-6)
    assert kappas[1] == pytest.approx(-1.0 + 273.0 * (1.0 + 1.8 / 1.1 - 1.0), rel=1e-14)
    assert kappas[1] == pytest.approx(445.727, abs=1e-3)
    full = ex.bootstrap_sequences(p, k_max=40, stop_tol=0.0)[0]
    assert abs(full[40] - ex.alpha_star(p)) <= 1e-8
    assert k_star is None  # alpha_* < 2 here


def test_bootstrap_monotone_and_bounded_grid():
    for g, n in grid_in({ex.Regime.DENSITY, ex.Regime.W1P, ex.Regime.FULL}):
        p = P(n, g)
        alphas, _, _ = ex.bootstrap_sequences(p)
        a_star = ex.alpha_star(p)
        steps = np.diff(alphas)
        # strictly increasing until the sequence has converged to rounding level
        assert np.all(steps[np.abs(steps) > 1e-13] > 0.0)
        assert max(alphas) <= a_star + 1e-12


def test_bootstrap_requires_positive_phi0():
    with pytest.raises(DomainError):
        ex.bootstrap_sequences(P(0.4, 1.0))


def test_kappa_identity_grid():
    for g, n in grid_in({ex.Regime.DENSITY, ex.Regime.W1P, ex.Regime.FULL}):
        p = P(n, g)
        assert ex.kappa_exponent(p) == pytest.approx(ex.bootstrap_sequences(p, k_max=1)[1][1], abs=1e-10)


def test_kappa_examples():
    assert ex.kappa_exponent(P(0.1, 1.0)) == pytest.approx(445.727, abs=1e-3)
    g = 0.5
    assert ex.kappa_exponent(P(g / (2 * g + 1) + 0.01, g)) is None


def test_eta_examples():
    p = P(0.05, 1.0)
    phi2 = 3.8 / 1.15 - 1.0
    a_star = (-3 + math.sqrt(77)) / 2
    expected = 2 * (phi2 - 1) / (phi2 - 2) * (13 * (1 + a_star) * 2.05 / 0.05 - 1)
    assert ex.eta_exponent(p) == pytest.approx(expected, rel=1e-13)
    assert ex.eta_exponent(p) == pytest.approx(1.7752e4, rel=1e-4)
    assert ex.eta_exponent(P(0.1, 1.0)) is None
    g = 1.0
    assert ex.eta_exponent(P(g / (4 * g + 9), g)) is None


def test_sobolev_examples():
    p1, p2, chi = ex.sobolev_orders(P(0.05, 1.0))
    assert p1 == pytest.approx(2.875, abs=1e-12)
    assert p2 == pytest.approx(1.179487, abs=1e-6)
    assert chi == pytest.approx(1.0 - 2.0 / 2.875, abs=1e-12)
    assert ex.sobolev_orders(P(0.1, 1.0)) is None


def test_p_q_identity_full_grid():
    pts = grid_in({ex.Regime.FULL})
    assert pts
    for g, n in pts:
        p1, p2, _ = ex.sobolev_orders(P(n, g))
        q1, q2 = ex.sobolev_orders_via_phi(P(n, g))
        assert abs(p1 - q1) <= 1e-10 and abs(p2 - q2) <= 1e-10


def test_k_star_bound_full_grid():
    checked = 0
    for g, n in grid_in({ex.Regime.FULL}):
        p = P(n, g)
        alphas, kappas, k_star = ex.bootstrap_sequences(p)
        if k_star is None:
            continue
        phi2 = ex.phi_alpha(2.0, p)
        assert k_star + 1 <= 2 * (phi2 - 1) / (phi2 - 2)
        # kappa at k_* + 1, extending the recursion past early stopping if needed
        kap = kappas[k_star + 1] if k_star + 1 < len(kappas) else None
        if kap is None:
            a = alphas[k_star]
            kap = kappas[k_star] - 1 + 13 * (2 + n) / n * (1 + ex.phi_alpha(a, p))
        assert kap <= ex.eta_exponent(p)
        checked += 1
    assert checked > 50


def test_threshold_sign_agreement_grid():
    for g, n in GRID:
        p = P(n, g)
        d, f = g / (2 * g + 1), g / (4 * g + 9)
        if abs(n - d) > 1e-9:
            assert (ex.phi_alpha(0.0, p) > 0) == (n < d)
        if abs(n - f) > 1e-9:
            assert (ex.phi_alpha(2.0, p) > 2) == (n < f)


@pytest.mark.parametrize("nu,regime", [(0.05, ex.Regime.FULL), (0.3, ex.Regime.DENSITY), (0.4, ex.Regime.NONE),
                                       (0.1, ex.Regime.W1P)])
def test_classify_examples(nu, regime):
    assert ex.classify_regime(P(nu, 1.0)) is regime


def test_classify_boundaries_go_to_weaker_regime():
    g = 1.0
    assert ex.classify_regime(P(g / 3, g)) is ex.Regime.NONE
    assert ex.classify_regime(P(g / 7, g)) is ex.Regime.DENSITY
    assert ex.classify_regime(P(g / 13, g)) is ex.Regime.W1P


def test_dimension3_examples():
    m = ex.from_dimension3(9.0)
    assert (m.nu, m.gamma) == (0.25, 0.5)
    assert m.nu == m.gamma / (2 * m.gamma + 1)
    assert not m.density_regime
    assert ex.from_dimension3(30.0).full_regime
    m7 = ex.from_dimension3(7.0)
    assert m7.nu == pytest.approx(1 / 3) and m7.gamma == pytest.approx(1 / 3)
    assert ex.classify_regime(P(m7.nu - 1e-12, m7.gamma)) is ex.Regime.NONE
    assert ex.FULL_S_THRESHOLD == pytest.approx(29.8924, abs=1e-4)
    assert not ex.from_dimension3(29.892).full_regime and ex.from_dimension3(29.893).full_regime


@given(st.floats(9.001, 200.0))
def test_dimension3_flags_agree_with_classifier(s):
    m = ex.from_dimension3(s)
    assume(abs(s - ex.FULL_S_THRESHOLD) > 1e-6)
    regime = ex.classify_regime(P(m.nu, m.gamma))
    assert m.density_regime == (regime is not ex.Regime.NONE)
    assert m.full_regime == (regime is ex.Regime.FULL)


@given(st.floats(0.01, 1.0), st.floats(0.001, 0.499))
def test_report_consistency_property(g, n):
    p = P(n, g)
    r = ex.regime_report(p)
    assert (r.eta is None) == (r.regime is not ex.Regime.FULL)
    assert (r.kappa is None) == (r.regime is ex.Regime.NONE)
    assert (r.p1 is None) == (r.regime is not ex.Regime.FULL)
    json.loads(r.to_json())


def test_report_none_regime_has_notes():
    r = ex.regime_report(P(0.4, 1.0))
    assert r.regime is ex.Regime.NONE
    assert r.alpha_star is None and r.eta is None and r.p1 is None
    assert {"alpha_star", "eta", "kappa", "sobolev"} <= set(r.notes)
