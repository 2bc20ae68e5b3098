import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from boltzlab.errors import ConfigError, DomainError
from boltzlab.kernel import (
    HALF_PI,
    CutoffSchedule,
    G_tail,
    KernelParams,
    b_density,
    collide,
    confinement_weight,
    deflection_matrix,
    g_inverse,
    gamma_eps_of,
    phi_eps,
    smooth_angle_cutoff,
    weight_phi_lambda,
    zeta_alpha,
)


def quad_tail(x, nu):
    # substitute t = e^u so the integrand stays smooth near 0
    val, _ = integrate.quad(lambda u: math.exp(-nu * u), math.log(x), math.log(HALF_PI), epsabs=0, epsrel=1e-13)
    return val


# -- cross-section and mass coordinates ---------------------------------------

def test_b_density_values():
    assert b_density(HALF_PI, 0.5) == pytest.approx(HALF_PI ** -1.5, rel=1e-15)
    assert b_density(HALF_PI, 0.5) == pytest.approx(0.50795, abs=5e-6)
    assert b_density(0.1, 0.25) == pytest.approx(17.7828, abs=1e-4)
    assert b_density(-0.3, 0.2) == b_density(0.3, 0.2)


def test_b_density_rejects_zero_and_wide_angles():
    with pytest.raises(DomainError):
        b_density(0.0, 0.2)
    with pytest.raises(DomainError):
        b_density(2.0, 0.2)


@pytest.mark.parametrize("x,nu", [(math.pi / 4, 0.5), (0.1, 0.3), (0.01, 0.1), (1.2, 0.45)])
def test_G_tail_matches_quadrature(x, nu):
    assert G_tail(x, nu) == pytest.approx(quad_tail(x, nu), rel=1e-10)


def test_G_tail_examples():
    assert G_tail(HALF_PI, 0.3) == 0.0
    # the printed reference 0.660988 is truncated; quadrature gives 0.6609892
    assert G_tail(math.pi / 4, 0.5) == pytest.approx(0.660988, abs=2e-6)
    assert G_tail(0.1, 0.3) > G_tail(0.2, 0.3)


def test_g_inverse_examples():
    assert g_inverse(0.0, 0.3) == pytest.approx(HALF_PI, rel=1e-15)
    z = quad_tail(math.pi / 4, 0.5)
    assert g_inverse(z, 0.5) == pytest.approx(math.pi / 4, abs=1e-10)
    assert g_inverse(-1.0, 0.2) == -g_inverse(1.0, 0.2)


@pytest.mark.parametrize("z", [0.3, 2.0, 17.0, 150.0])
def test_g_inverse_matches_root_finding(z):
    nu = 0.25
    root = optimize.brentq(lambda t: quad_tail(t, nu) - z, 1e-7, HALF_PI, xtol=1e-15)
    assert g_inverse(z, nu) == pytest.approx(root, rel=1e-8)


@pytest.mark.parametrize("nu", [0.1, 0.25, 0.45])
def test_round_trip_grid(nu):
    x = np.linspace(0.01, HALF_PI, 5000)
    assert np.max(np.abs(g_inverse(G_tail(x, nu), nu) - x)) <= 1e-10


@given(st.floats(0.01, HALF_PI), st.sampled_from([0.1, 0.25, 0.45]))
def test_round_trip_property(x, nu):
    assert abs(g_inverse(G_tail(x, nu), nu) - x) <= 1e-10


# -- smooth cutoffs -------------------------------------------------------------

def test_smooth_angle_cutoff_plateaus():
    zeta, nu = 0.1, 0.25
    gz = G_tail(zeta, nu)
    assert smooth_angle_cutoff(0.0, zeta, nu) == 1.0
    assert smooth_angle_cutoff(gz, zeta, nu) == 1.0
    # gz + 1 - gz is 1 only up to rounding
    assert smooth_angle_cutoff(gz + 1.0, zeta, nu) == pytest.approx(0.0, abs=1e-12)
    assert smooth_angle_cutoff(gz + 1.5, zeta, nu) == 0.0
    mid = smooth_angle_cutoff(gz + 0.5, zeta, nu)
    assert 0.0 < mid < 1.0
    assert smooth_angle_cutoff(-(gz + 0.5), zeta, nu) == mid


def test_smooth_angle_cutoff_is_c2_and_monotone():
    zeta, nu = 0.2, 0.3
    gz = G_tail(zeta, nu)
    z = np.linspace(gz - 0.5, gz + 1.5, 20001)
    w = smooth_angle_cutoff(z, zeta, nu)
    assert np.all(np.diff(w) <= 0.0)
    h = z[1] - z[0]
    d2 = np.diff(w, 2) / h ** 2
    # second derivative has no jumps: neighbouring values differ by O(h)
    assert np.max(np.abs(np.diff(d2))) < 1e-2


def test_phi_eps_examples():
    assert phi_eps(5.0, 0.01, 10.0) == 5.0
    assert phi_eps(0.005, 0.01, 10.0) == 0.02
    assert phi_eps(100.0, 0.01, 10.0) == 10.0


def test_phi_eps_sandwich_and_monotone():
    eps, big = 0.01, 6.0
    x = np.linspace(0.0, big + 3.0, 200_001)
    f = phi_eps(x, eps, big)
    assert np.all(f >= 2 * eps) and np.all(f <= big)
    assert np.all(np.diff(f) >= 0.0)


def test_phi_eps_joins_are_c1():
    eps, big = 0.01, 6.0
    for knot in (eps, 3 * eps, big - 1.0, big):
        h = 1e-7
        left = (phi_eps(knot, eps, big) - phi_eps(knot - h, eps, big)) / h
        right = (phi_eps(knot + h, eps, big) - phi_eps(knot, eps, big)) / h
        assert left == pytest.approx(right, abs=1e-4)


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_phi_eps_order_property(a, b):
    lo, hi = sorted((a, b))
    assert phi_eps(lo, 0.02, 5.0) <= phi_eps(hi, 0.02, 5.0)


def test_phi_eps_rejects_empty_window():
    with pytest.raises(ConfigError):
        phi_eps(1.0, 0.5, 1.2)


def test_confinement_weight():
    assert confinement_weight(0.5, 8.0) == 1.0
    assert confinement_weight(9.0, 8.0) == 0.0
    assert 0.0 < confinement_weight(7.5, 8.0) < 1.0
    m = np.linspace(0.0, 10.0, 1001)
    assert np.all(np.diff(confinement_weight(m, 8.0)) <= 0.0)


# -- truncation level and schedules ---------------------------------------------

def test_gamma_eps_examples():
    assert gamma_eps_of(math.exp(-4.0), 1.5) == pytest.approx(8.0, rel=1e-14)
    assert gamma_eps_of(math.exp(-1.0) * (1 - 1e-16), 2.0) == pytest.approx(1.0, rel=1e-12)
    assert gamma_eps_of(0.01, 1.2) == pytest.approx(math.log(100.0) ** 1.2, rel=1e-15)
    assert gamma_eps_of(0.01, 1.2) == pytest.approx(6.25021, abs=1e-5)


def test_gamma_eps_guard():
    with pytest.raises(ConfigError, match="1/e"):
        gamma_eps_of(0.5, 1.0)


def _log_gamma_eps(n, eta0):
    # log-space Gamma for eps = 2^-n, which underflows long before the limit shows
    return eta0 * math.log(n * math.log(2.0))


def test_truncation_asymptotics():
    # eta0 < 1/gamma on the admissible interval, so eps^a exp(Gamma^gamma) -> 0
    gamma, eta0, a = 1.0, 0.8, 0.1
    n = np.unique(np.logspace(0.5, 7, 4000).astype(int))
    log_val = -a * n * math.log(2.0) + np.exp(gamma * np.array([_log_gamma_eps(k, eta0) for k in n]))
    first = int(np.argmax(log_val < math.log(1e-6)))
    assert log_val[first] < math.log(1e-6)
    tail = log_val[n > 60_000]
    assert np.all(np.diff(tail) < 0.0)


def test_dual_truncation_asymptotics():
    kappa, eta0, big_a = 2.0, 0.8, 5.0
    n = np.arange(2, 400)
    log_val = big_a * n * math.log(2.0) - np.exp(kappa * np.array([_log_gamma_eps(k, eta0) for k in n]))
    tail = log_val[-100:]
    assert np.all(np.diff(tail) < 0.0) and tail[-1] < math.log(1e-6)


def test_schedule_constants():
    p = KernelParams.with_defaults(0.25, 1.0)
    s = CutoffSchedule.build(p, 0.01, 0.1)
    assert s.eta0 == pytest.approx(0.5 * (1.0 / 1.5 + 1.0))
    assert s.gamma_eps == pytest.approx(math.log(100.0) ** s.eta0, rel=1e-15)
    assert s.rate == pytest.approx(4.0 * (quad_tail(0.1, 0.25) + 1.0) * s.gamma_eps, rel=1e-10)
    assert s.u_max == pytest.approx(2.0 * s.gamma_eps)
    assert s.molli_var_coeff == pytest.approx(0.1 ** 4.25)


def test_schedule_rejects_eta0_outside_interval():
    p = KernelParams.with_defaults(0.25, 1.0)
    with pytest.raises(ConfigError, match=r"1/lambda, 1/\(gamma v nu\)") as exc:
        CutoffSchedule.build(p, 0.01, 0.1, eta0=1.2)
    assert exc.value.key == "eta0"


def test_kernel_params_validation():
    with pytest.raises(ConfigError) as exc:
        KernelParams.with_defaults(0.6, 1.0)
    assert exc.value.key == "nu"
    with pytest.raises(ConfigError):
        KernelParams.with_defaults(0.2, 1.5)
    with pytest.raises(ConfigError):
        KernelParams(0.2, 1.0, 0.9, 0.5)


def test_zeta_alpha():
    assert zeta_alpha(0.01, 1.0, 0.5, 0.0) == pytest.approx(1e-8, rel=1e-12)


# -- collision geometry ---------------------------------------------------------

def test_deflection_matrix_examples():
    assert np.array_equal(deflection_matrix(0.0), np.zeros((2, 2)))
    np.testing.assert_allclose(deflection_matrix(HALF_PI), 0.5 * np.array([[-1, -1], [1, -1]]), atol=1e-16)
    assert np.linalg.norm(deflection_matrix(0.3), 2) == pytest.approx(abs(math.sin(0.15)), abs=1e-12)
    assert abs(math.sin(0.15)) <= 0.15


def test_deflection_operator_norm_grid():
    for th in np.linspace(-HALF_PI, HALF_PI, 401):
        assert np.linalg.norm(deflection_matrix(th), 2) == pytest.approx(abs(math.sin(th / 2)), abs=1e-12)


def test_collide_examples():
    v = np.array([0.3, -1.2])
    a, b = collide(v, v, 0.7)
    np.testing.assert_array_equal(a, v)
    np.testing.assert_array_equal(b, v)
    a, b = collide([1.0, 0.0], [-1.0, 0.0], HALF_PI)
    np.testing.assert_allclose(a, [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(b, [0.0, -1.0], atol=1e-15)
    a, b = collide([1.0, 2.0], [3.0, -1.0], 0.0)
    np.testing.assert_array_equal(a, [1.0, 2.0])
    np.testing.assert_array_equal(b, [3.0, -1.0])


def test_collide_matches_deflection_update():
    gen = np.random.default_rng(4)
    for _ in range(200):
        v, w = gen.standard_normal(2), gen.standard_normal(2)
        th = gen.uniform(-HALF_PI, HALF_PI)
        a, _ = collide(v, w, th)
        np.testing.assert_allclose(a, v + deflection_matrix(th) @ (v - w), atol=1e-14)


def test_collide_conservation_bulk():
    gen = np.random.default_rng(11)
    worst_p = worst_e = 0.0
    for _ in range(10_000):
        v, w = gen.standard_normal(2) * 4, gen.standard_normal(2) * 4
        a, b = collide(v, w, gen.uniform(-HALF_PI, HALF_PI))
        scale = math.sqrt(v @ v + w @ w)
        worst_p = max(worst_p, np.linalg.norm(a + b - v - w) / scale)
        worst_e = max(worst_e, abs(a @ a + b @ b - v @ v - w @ w) / scale ** 2)
    assert worst_p <= 1e-12 and worst_e <= 1e-12


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=300)
@given(finite, finite, finite, finite, st.floats(-HALF_PI, HALF_PI))
def test_collide_conservation_property(x1, y1, x2, y2, th):
    v, w = np.array([x1, y1]), np.array([x2, y2])
    a, b = collide(v, w, th)
    scale = max(1.0, v @ v + w @ w)
    assert np.linalg.norm(a + b - v - w) <= 1e-12 * math.sqrt(scale)
    assert abs(a @ a + b @ b - v @ v - w @ w) <= 1e-12 * scale


# -- moment weight ----------------------------------------------------------------

def test_weight_phi_lambda_examples():
    assert weight_phi_lambda([3.0, 0.0], 1.0) == pytest.approx(math.e ** 3, rel=1e-15)
    assert weight_phi_lambda([0.0, 0.0], 1.0) == pytest.approx(math.e, rel=1e-15)
    assert weight_phi_lambda([0.0, 4.0], 0.5) == pytest.approx(math.e ** 2, rel=1e-15)


def test_weight_phi_lambda_monotone_in_speed():
    r = np.linspace(0.0, 5.0, 2001)
    w = weight_phi_lambda(np.column_stack([r, np.zeros_like(r)]), 1.0)
    assert np.all(np.diff(w) >= 0.0)
    assert np.all(w >= math.e)
