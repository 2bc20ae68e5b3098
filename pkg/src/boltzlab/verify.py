"""Acceptance checks A1-A11 with fixed seeds.

Each check returns a :class:`Verdict`. Sizes stated by a check are used as
stated; checks that leave the ensemble size open take it from the profile
(``quick``: N = 10^4 with 8 replicas, ``full``: N = 10^5 with 32 replicas).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import exponents as ex
from . import measure
from . import rng as rngmod
from . import simulator as sim
from .kernel import (
    HALF_PI,
    CutoffSchedule,
    KernelParams,
    G_tail,
    collide,
    g_inverse,
    phi_eps,
)

SEED = 20240611


def criterion_seed(cid, master=SEED):
    """Independent seed per criterion, derived from the master seed."""
    return rngmod.substream_seed(master, 0, f"verify:{cid}") >> 1


@dataclass(frozen=True)
class Profile:
    name: str
    n: int
    replicas: int
    budget_s: float


PROFILES = {
    "quick": Profile("quick", 10_000, 8, 300.0),
    "full": Profile("full", 100_000, 32, 1800.0),
}


@dataclass
class Verdict:
    cid: str
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"{self.cid} {'PASS' if self.passed else 'FAIL'}  {self.title}  ({self.seconds:.1f}s)"

    def to_dict(self):
        return {"id": self.cid, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "detail": _jsonable(self.detail)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, ex.Regime):
        return x.value
    return x


# -- A1-A3: exact identities -------------------------------------------------

def check_a1(profile, master=SEED):
    gammas = np.linspace(0.02, 1.0, 50)
    nus = np.linspace(0.005, 0.495, 50)
    worst = {"alpha": 0.0, "kappa": 0.0, "p_q": 0.0}
    counts = {r.value: 0 for r in ex.Regime}
    sign_bad = []
    for g in gammas:
        for n in nus:
            p = KernelParams.with_defaults(float(n), float(g))
            regime = ex.classify_regime(p)
            counts[regime.value] += 1
            phi0 = ex.phi_alpha(0.0, p)
            phi2 = ex.phi_alpha(2.0, p)
            if regime is not ex.Regime.NONE:
                worst["alpha"] = max(worst["alpha"], abs(ex.alpha_star(p) - ex.fixed_point_iterate(p)))
                _, kappas, _ = ex.bootstrap_sequences(p, k_max=1)
                worst["kappa"] = max(worst["kappa"], abs(ex.kappa_exponent(p) - kappas[1]))
            if regime is ex.Regime.FULL:
                p1, p2, _ = ex.sobolev_orders(p)
                q1, q2 = ex.sobolev_orders_via_phi(p)
                worst["p_q"] = max(worst["p_q"], abs(p1 - q1), abs(p2 - q2))
            # sign agreement, away from the thresholds
            d_thr, f_thr = ex.density_threshold(g), ex.full_threshold(g)
            if abs(n - d_thr) > 1e-9 and (phi0 > 0.0) != (n < d_thr):
                sign_bad.append((float(g), float(n), "phi(0)"))
            if abs(n - f_thr) > 1e-9 and (phi2 > 2.0) != (n < f_thr):
                sign_bad.append((float(g), float(n), "phi(2)-2"))
    ok = all(v <= 1e-10 for v in worst.values()) and not sign_bad and all(counts.values())
    return ok, {"max_abs_diff": worst, "grid_points_per_regime": counts, "sign_mismatches": sign_bad[:10]}


def check_a2(profile, master=SEED):
    m9 = ex.from_dimension3(9.0)
    boundary_gap = abs(m9.nu - ex.density_threshold(m9.gamma))
    below = ex.from_dimension3(29.892)
    above = ex.from_dimension3(29.893)
    cls_below = ex.classify_regime(KernelParams.with_defaults(below.nu, below.gamma))
    cls_above = ex.classify_regime(KernelParams.with_defaults(above.nu, above.gamma))
    ok = (boundary_gap <= 1e-6 and not below.full_regime and above.full_regime
          and cls_below is not ex.Regime.FULL and cls_above is ex.Regime.FULL
          and abs(ex.FULL_S_THRESHOLD - 29.8924) < 1e-4)
    return ok, {
        "s9_boundary_gap": boundary_gap,
        "full_at_29.892": below.full_regime,
        "full_at_29.893": above.full_regime,
        "s_threshold": ex.FULL_S_THRESHOLD,
    }


def check_a3(profile, master=SEED):
    seed = criterion_seed("A3", master)
    gen = np.random.default_rng(seed)
    nu = 0.3
    theta = np.linspace(1e-4, HALF_PI, 2001)
    round_trip = float(np.max(np.abs(g_inverse(G_tail(theta, nu), nu) - theta)))

    v = gen.standard_normal((10_000, 2)) * 3.0
    w = gen.standard_normal((10_000, 2)) * 3.0
    th = gen.uniform(-HALF_PI, HALF_PI, 10_000)
    mom_err = en_err = 0.0
    for a, b, t in zip(v, w, th):
        a2, b2 = collide(a, b, t)
        p0 = np.hypot(*(a + b))
        e0 = a @ a + b @ b
        mom_err = max(mom_err, float(np.hypot(*(a2 + b2 - a - b)) / max(p0, e0 ** 0.5)))
        en_err = max(en_err, abs(float(a2 @ a2 + b2 @ b2 - e0)) / e0)

    eps, big = 0.01, 4.0
    x = np.linspace(0.0, big + 2.0, 60_001)
    f = phi_eps(x, eps, big)
    low, mid, high = x <= eps, (x >= 3 * eps) & (x <= big - 1.0), x >= big
    plateau_ok = bool(np.all(f[low] == 2 * eps) and np.all(f[mid] == x[mid]) and np.all(f[high] == big))
    ok = round_trip <= 1e-10 and mom_err <= 1e-12 and en_err <= 1e-12 and plateau_ok
    return ok, {"g_G_round_trip": round_trip, "momentum_rel_err": mom_err,
                "energy_rel_err": en_err, "phi_eps_regions_exact": plateau_ok}


# -- A4-A7: simulator contracts ----------------------------------------------

_P_STD = KernelParams.with_defaults(0.25, 1.0)


def check_a4(profile, master=SEED):
    seed = criterion_seed("A4", master)
    sch = CutoffSchedule.build(_P_STD, 0.01, 0.1)
    cfg = sim.SimConfig(_P_STD, sch, 1000, 1.0, (1.0,), sim.dirac((0.7, -0.3)), seed=seed)
    tr = sim.run(cfg)
    moved = int(np.count_nonzero(np.any(tr.snapshots[-1].velocities != tr.initial.velocities, axis=1)))
    rmax_same = bool(np.array_equal(tr.snapshots[-1].running_max, tr.initial.running_max))
    return moved == 0 and rmax_same and tr.arrivals > 0, {
        "particles_moved": moved, "running_max_unchanged": rmax_same, "arrivals": tr.arrivals}


def check_a5(profile, master=SEED):
    seed = criterion_seed("A5", master)
    sch = CutoffSchedule.build(_P_STD, 0.01, 0.1)
    cfg = sim.SimConfig(_P_STD, sch, 10_000, 1.0, (1.0,), sim.gaussian(), seed=seed)
    trs = sim.run_replicas(cfg, 8)
    v0 = [tr.initial.velocities for tr in trs]
    v1 = [tr.snapshots[-1].velocities for tr in trs]
    drift = {
        "momentum_x": np.array([b[:, 0].mean() - a[:, 0].mean() for a, b in zip(v0, v1)]),
        "momentum_y": np.array([b[:, 1].mean() - a[:, 1].mean() for a, b in zip(v0, v1)]),
        "energy": np.array([0.5 * ((b * b).sum(1).mean() - (a * a).sum(1).mean()) for a, b in zip(v0, v1)]),
    }
    detail, ok = {}, True
    for k, d in drift.items():
        se, _ = measure.bootstrap(d)
        detail[k] = {"mean_drift": float(d.mean()), "bootstrap_se": float(se),
                     "z": float(abs(d.mean()) / se) if se > 0 else 0.0}
        ok &= abs(d.mean()) <= 3.0 * se
    return ok, detail


def check_a6(profile, master=SEED):
    seed = criterion_seed("A6", master)
    sch = CutoffSchedule.build(_P_STD, 0.01, 0.1)
    base = dict(params=_P_STD, schedule=sch, n=2000, t_end=0.5, snapshot_times=(0.5,),
                initial_law=sim.gaussian(), seed=seed)
    fic = sim.run_replicas(sim.SimConfig(scheme="fictive", **base), 50)
    real = sim.run_replicas(sim.SimConfig(scheme="real", **base), 50, first_replica=50)
    res = measure.ks_planar_grouped([t.snapshots[-1].velocities for t in fic],
                                    [t.snapshots[-1].velocities for t in real], level=0.01)
    detail = {k: {"statistic": r.statistic, "pvalue": r.pvalue, "reject": r.reject} for k, r in res.items()}
    detail["level_per_test"] = 0.01 / 3.0
    return not any(r.reject for r in res.values()), detail


def check_a7(profile, master=SEED):
    seed = criterion_seed("A7", master)
    n, t_end = 1000, 1.0
    detail, ok = [], True
    for k, (eps, zeta) in enumerate(((0.01, 0.1), (0.05, 0.2), (0.001, 0.05))):
        sch = CutoffSchedule.build(_P_STD, eps, zeta)
        tr = sim.run(sim.SimConfig(_P_STD, sch, n, t_end, (t_end,), sim.gaussian(), seed=seed + k))
        mean = n * sch.rate * t_end
        z = (tr.arrivals - mean) / math.sqrt(mean)
        detail.append({"epsilon": eps, "zeta": zeta, "rate": sch.rate, "events": tr.arrivals,
                       "expected": mean, "z": z})
        ok &= abs(z) <= 4.0
    return ok, {"schedules": detail}


# -- A8-A10: quantitative envelopes ------------------------------------------

A8_LADDER = (0.2, 0.1, 0.05, 0.025)
A8_REF = 0.01
A8_TIME = 0.1


def check_a8(profile, master=SEED):
    seed = criterion_seed("A8", master)
    p = KernelParams.with_defaults(0.25, 1.0)
    eps = 0.01
    schedules = [CutoffSchedule.build(p, eps, z) for z in A8_LADDER + (A8_REF,)]
    cfg = sim.SimConfig(p, schedules[0], profile.n, A8_TIME, (A8_TIME,), sim.gaussian(), seed=seed)
    coupled = [sim.coupled_run(cfg, schedules, replica=r) for r in range(profile.replicas)]
    points, fit = measure.coupling_error_curve(coupled, A8_TIME)
    rungs = [pt for pt in points if pt.zeta != A8_REF]
    expo = 1.0 - p.nu
    monotone = all(
        b.mean_error <= a.mean_error + 3.0 * math.hypot(a.stderr, b.stderr) for a, b in zip(rungs, rungs[1:])
    )
    # one-sided envelope: the constant set by the coarsest rung bounds every finer rung
    scaled = [(pt.mean_error / pt.zeta ** expo, pt.stderr / pt.zeta ** expo) for pt in rungs]
    c0, s0 = scaled[0]
    bounded = all(c <= c0 + 3.0 * math.hypot(s, s0) for c, s in scaled[1:])
    return monotone and bounded, {
        "t": A8_TIME,
        "n": profile.n,
        "replicas": profile.replicas,
        "zeta": [pt.zeta for pt in rungs],
        "mean_error": [pt.mean_error for pt in rungs],
        "stderr": [pt.stderr for pt in rungs],
        "log_error_minus_scaled_log_zeta": [math.log(pt.mean_error) - expo * math.log(pt.zeta) for pt in rungs],
        "non_increasing": monotone,
        "envelope_bounded": bounded,
        "fitted_log_log_slope": None if fit is None else fit.slope,
    }


def check_a9(profile, master=SEED):
    seed = criterion_seed("A9", master)
    p = KernelParams.with_defaults(0.25, 1.0, lambda_prime=1.0)
    sch = CutoffSchedule.build(p, 0.01, 0.05)
    law = sim.two_point((0.0, 0.0), (1.0, 0.0))
    tr = sim.run(sim.SimConfig(p, sch, 100_000, 1.0, (1.0,), law, seed=seed))
    v0, v1 = tr.initial.velocities, tr.snapshots[-1].velocities
    rates, ok = {}, True
    for r in (2.0, 3.0, 4.0):
        m = measure.tail_mass(v1, r)
        rate = math.inf if m == 0.0 else -math.log(m) / r
        rates[str(r)] = {"tail_mass": m, "decay_rate": rate}
        ok &= rate >= 0.2
    m0 = measure.exp_moment(v0, 1.0)
    m1 = measure.exp_moment(v1, 1.0)
    moment_ok = math.isfinite(m1.mean) and m1.ci_high <= 3.0 * m0.mean and m1.ci_low >= m0.mean / 3.0
    return ok and moment_ok, {"tails": rates, "exp_moment_t0": m0.mean, "exp_moment_t1": m1.mean,
                              "exp_moment_t1_ci": [m1.ci_low, m1.ci_high]}


A10_TIMES = (0.05, 0.1, 0.2, 0.5, 1.0)


def check_a10(profile, master=SEED):
    seed = criterion_seed("A10", master)
    p = KernelParams.with_defaults(0.05, 1.0)
    sch = CutoffSchedule.build(p, 0.01, 0.05)
    law = sim.two_point((0.0, 0.0), (1.0, 0.0))
    cfg = sim.SimConfig(p, sch, profile.n, A10_TIMES[-1], A10_TIMES, law, seed=seed)
    trs = sim.run_replicas(cfg, profile.replicas)
    gens = [rngmod.SeedLineage(seed, r).stream(rngmod.MOLLIFY) for r in range(profile.replicas)]
    sups = []
    for k, t in enumerate(A10_TIMES):
        samples = [sim.mollify(tr.snapshots[k], t, sch, g) for tr, g in zip(trs, gens)]
        f = np.concatenate([s.f_samples for s in samples])
        w = np.concatenate([s.g_weights for s in samples])
        sups.append(measure.kde(f, weights=w).sup())
    finite = all(math.isfinite(s) and s > 0.0 for s in sups)
    eta = ex.eta_exponent(p)
    eta_emp = math.nan
    if finite:
        eta_emp = -measure.fit_time_blowup(list(zip(A10_TIMES, sups))).slope
    ok = finite and math.isfinite(eta_emp) and (eta is None or eta_emp <= eta)
    return ok, {"times": list(A10_TIMES), "kde_sup": sups, "eta_empirical": eta_emp, "eta_bound": eta,
                "note": "eta is a loose upper bound; this is a sanity envelope"}


def check_a11(profile, master=SEED):
    seed = criterion_seed("A11", master)
    gen = np.random.default_rng(seed)
    n = 100_000
    r = gen.gamma(2.0, 1.0, n)
    th = gen.uniform(0.0, 2.0 * math.pi, n)
    expo = np.column_stack([r * np.cos(th), r * np.sin(th)])
    gauss = gen.standard_normal((n, 2))
    e1 = measure.kde(expo)
    e2 = measure.kde(gauss)
    s1 = measure.fit_spatial_decay(e1, 1.0).slope
    s2 = measure.fit_spatial_decay(e2, 2.0).slope
    ok = abs(s1 + 1.0) <= 0.05 and abs(s2 + 0.5) <= 0.05 and abs(e1.mass() - 1.0) <= 0.02 and abs(e2.mass() - 1.0) <= 0.02
    return ok, {"exponential_slope": s1, "gaussian_slope": s2, "kde_mass": [e1.mass(), e2.mass()]}


CRITERIA = {
    "A1": ("exponent identities on a (gamma, nu) grid", check_a1),
    "A2": ("dimension-3 mapping boundaries", check_a2),
    "A3": ("kernel exactness", check_a3),
    "A4": ("Dirac start never moves", check_a4),
    "A5": ("momentum and energy drift", check_a5),
    "A6": ("fictive vs real scheme equivalence", check_a6),
    "A7": ("Poisson event counts", check_a7),
    "A8": ("coupling error envelope", check_a8),
    "A9": ("tail decay and exponential moment", check_a9),
    "A10": ("regularized density and blow-up envelope", check_a10),
    "A11": ("estimator self-tests", check_a11),
}


def run_criterion(cid, profile="quick", seed=SEED):
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    title, fn = CRITERIA[cid]
    t0 = time.perf_counter()
    try:
        ok, detail = fn(prof, seed)
    except Exception as exc:  # a crash is a failed check, not a harness error
        ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
    return Verdict(cid, title, bool(ok), detail, time.perf_counter() - t0)


def run_all(profile="quick", only=None, on_result=None, seed=SEED):
    """Run the selected criteria in order; ``on_result`` is called after each one."""
    out = []
    for cid in CRITERIA:
        if only and cid not in only:
            continue
        v = run_criterion(cid, profile, seed)
        out.append(v)
        if on_result is not None:
            on_result(v)
    return out
