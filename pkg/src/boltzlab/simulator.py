"""N-particle simulation of the regularized jump equation.

Each particle carries an independent Poisson clock of rate
``4 (G(zeta) + 1) Gamma_eps^gamma``; at a tick particle ``i`` picks a partner
``j`` uniformly among the others and a mass coordinate ``z``. In the
*fictive* scheme the tick is thinned by ``u <= phi_eps(|V_i - V_j|)^gamma``;
in the *real* scheme the same law is produced by a cemetery/acceptance draw
made before ``z`` is sampled. Only ``V_i`` moves (one-sided Nanbu jump) unless
``symmetric`` is set.

The event loop itself lives in :mod:`boltzlab._backend`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend, rng as rngmod
from .errors import ConfigError
from .kernel import CutoffSchedule, KernelParams, confinement_weight

CHUNK = 1 << 16
SCHEMES = ("fictive", "real")


# -- initial laws ------------------------------------------------------------

def _vec(x, key):
    a = np.asarray(x, dtype=float)
    if a.shape != (2,):
        raise ConfigError("expected a planar vector [x, y]", key=key)
    return a


def validate_law(law, key="initial_law"):
    if not isinstance(law, dict) or "kind" not in law:
        raise ConfigError("initial law must be an object with a 'kind' entry", key=key)
    kind = law["kind"]
    if kind == "dirac":
        _vec(law.get("v0"), f"{key}.v0")
    elif kind == "two_point":
        _vec(law.get("a"), f"{key}.a")
        _vec(law.get("b"), f"{key}.b")
        w = law.get("w", 0.5)
        if not 0.0 < w < 1.0:
            raise ConfigError("weight must lie in (0, 1)", key=f"{key}.w")
    elif kind == "gaussian":
        _vec(law.get("mean", [0.0, 0.0]), f"{key}.mean")
        cov = np.asarray(law.get("cov", [[1.0, 0.0], [0.0, 1.0]]), dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) < 0.0):
            raise ConfigError("covariance must be a symmetric positive semi-definite 2x2 matrix", key=f"{key}.cov")
    elif kind == "uniform_disc":
        if not law.get("r", 0.0) > 0.0:
            raise ConfigError("radius must be positive", key=f"{key}.r")
        _vec(law.get("center", [0.0, 0.0]), f"{key}.center")
    elif kind == "mixture":
        comps = law.get("components")
        if not comps:
            raise ConfigError("mixture needs a non-empty component list", key=f"{key}.components")
        for k, c in enumerate(comps):
            if not c.get("weight", 0.0) > 0.0:
                raise ConfigError("component weight must be positive", key=f"{key}.components[{k}].weight")
            validate_law(c.get("law"), key=f"{key}.components[{k}].law")
    else:
        raise ConfigError(f"unknown initial law {kind!r}", key=f"{key}.kind")


def sample_law(law, n, gen):
    kind = law["kind"]
    if kind == "dirac":
        return np.tile(np.asarray(law["v0"], dtype=float), (n, 1))
    if kind == "two_point":
        pick_a = gen.random(n) < law.get("w", 0.5)
        return np.where(pick_a[:, None], np.asarray(law["a"], dtype=float), np.asarray(law["b"], dtype=float))
    if kind == "gaussian":
        mean = np.asarray(law.get("mean", [0.0, 0.0]), dtype=float)
        cov = np.asarray(law.get("cov", [[1.0, 0.0], [0.0, 1.0]]), dtype=float)
        return gen.multivariate_normal(mean, cov, size=n, method="cholesky" if np.all(np.linalg.eigvalsh(cov) > 0) else "eigh")
    if kind == "uniform_disc":
        r = law["r"] * np.sqrt(gen.random(n))
        a = 2.0 * math.pi * gen.random(n)
        return np.asarray(law.get("center", [0.0, 0.0]), dtype=float) + np.column_stack((r * np.cos(a), r * np.sin(a)))
    if kind == "mixture":
        comps = law["components"]
        w = np.array([c["weight"] for c in comps], dtype=float)
        idx = gen.choice(len(comps), size=n, p=w / w.sum())
        out = np.empty((n, 2))
        for k, c in enumerate(comps):
            sel = idx == k
            out[sel] = sample_law(c["law"], int(sel.sum()), gen)
        return out
    raise ConfigError(f"unknown initial law {kind!r}", key="initial_law.kind")


def dirac(v0):
    return {"kind": "dirac", "v0": list(map(float, v0))}


def two_point(a, b, w=0.5):
    return {"kind": "two_point", "a": list(map(float, a)), "b": list(map(float, b)), "w": float(w)}


def gaussian(mean=(0.0, 0.0), cov=((1.0, 0.0), (0.0, 1.0))):
    return {"kind": "gaussian", "mean": list(map(float, mean)), "cov": [list(map(float, r)) for r in cov]}


def uniform_disc(r, center=(0.0, 0.0)):
    return {"kind": "uniform_disc", "r": float(r), "center": list(map(float, center))}


def mixture(*weighted_laws):
    return {"kind": "mixture", "components": [{"weight": float(w), "law": law} for w, law in weighted_laws]}


# -- state -------------------------------------------------------------------

@dataclass
class Ensemble:
    velocities: np.ndarray
    time: float
    running_max: np.ndarray
    lineage: rngmod.SeedLineage

    @property
    def n(self):
        return self.velocities.shape[0]

    def copy(self):
        return Ensemble(self.velocities.copy(), self.time, self.running_max.copy(), self.lineage)


@dataclass(frozen=True)
class Snapshot:
    t: float
    velocities: np.ndarray
    running_max: np.ndarray


def _frozen(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def _snapshot(ens, t):
    return Snapshot(float(t), _frozen(ens.velocities), _frozen(ens.running_max))


def init_ensemble(initial_law, n, seed, replica=0):
    if n < 2:
        raise ConfigError("need at least two particles", key="n")
    validate_law(initial_law)
    lineage = rngmod.SeedLineage(int(seed), int(replica))
    v = np.ascontiguousarray(sample_law(initial_law, n, lineage.stream(rngmod.INIT)), dtype=float)
    return Ensemble(v, 0.0, np.sqrt(np.sum(v * v, axis=1)), lineage)


# -- single events -----------------------------------------------------------

@dataclass(frozen=True)
class EventDraw:
    t_event: float
    particle: int
    partner: int
    z: float
    u: float


def draw_event(ensemble, schedule, t_prev, gen):
    """Draw one candidate event of the fictive representation for ``ensemble``."""
    n = ensemble.n
    t = t_prev + gen.exponential(1.0 / (n * schedule.rate))
    i = int(gen.integers(n))
    j = int(gen.integers(n - 1))
    j += j >= i
    h = schedule.z_half_width
    return EventDraw(float(t), i, j, float(gen.uniform(-h, h)), float(gen.uniform(0.0, schedule.u_max)))


def fictive_step(ensemble, event: EventDraw, schedule: CutoffSchedule, params: KernelParams, symmetric=False):
    """Apply one fictive-shock candidate; returns a new ensemble."""
    n = ensemble.n
    if not (0 <= event.particle < n and 0 <= event.partner < n and event.particle != event.partner):
        raise ValueError("event indices must be distinct and within the ensemble")
    out = ensemble.copy()
    _backend.fictive_events(
        out.velocities, out.running_max,
        np.array([event.particle], dtype=np.int64), np.array([event.partner], dtype=np.int64),
        np.array([event.z]), np.array([event.u]),
        schedule.epsilon, schedule.gamma_eps, params.gamma, params.nu, schedule.g_zeta, int(symmetric),
    )
    out.time = max(out.time, float(event.t_event))
    return out


def real_step(ensemble, arrival, schedule: CutoffSchedule, params: KernelParams, gen, symmetric=False):
    """Apply one real-shock arrival ``(t, particle)``; partner and angle are drawn from ``gen``.

    Returns ``(new_ensemble, accepted)`` where ``accepted`` is False for the cemetery branch.
    """
    t, i = arrival
    n = ensemble.n
    if not 0 <= i < n:
        raise ValueError("particle index out of range")
    j = int(gen.integers(n - 1))
    j += j >= i
    uacc = gen.random()
    h = schedule.z_half_width
    z = gen.uniform(-h, h)
    out = ensemble.copy()
    acc, _ = _backend.real_events(
        out.velocities, out.running_max,
        np.array([i], dtype=np.int64), np.array([j], dtype=np.int64),
        np.array([uacc]), np.array([z]),
        schedule.epsilon, schedule.gamma_eps, params.gamma, params.nu, schedule.g_zeta, schedule.u_max,
        int(symmetric),
    )
    out.time = max(out.time, float(t))
    return out, bool(acc)


# -- event-driven runs -------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    params: KernelParams
    schedule: CutoffSchedule
    n: int
    t_end: float
    snapshot_times: tuple
    initial_law: dict
    seed: int = 0
    scheme: str = "fictive"
    symmetric: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("need at least two particles", key="n")
        if not self.t_end > 0.0:
            raise ConfigError("must be positive", key="t_end")
        ts = tuple(float(t) for t in self.snapshot_times)
        if not ts:
            raise ConfigError("at least one snapshot time is required", key="snapshots")
        if any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] <= 0.0 or ts[-1] > self.t_end:
            raise ConfigError("snapshot times must be strictly increasing in (0, t_end]", key="snapshots")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}", key="scheme")
        object.__setattr__(self, "snapshot_times", ts)
        validate_law(self.initial_law)


@dataclass
class Trajectory:
    initial: Snapshot
    snapshots: list
    schedule: CutoffSchedule
    lineage: dict
    arrivals: int = 0
    accepted: int = 0
    extra: dict = field(default_factory=dict)

    def at(self, t):
        for s in self.snapshots:
            if s.t == t:
                return s
        raise KeyError(f"no snapshot at t={t}")


class _Box:
    """Uniform candidate box ``[-zh, zh] x [0, u_max]`` and the matching total rate."""

    def __init__(self, z_half, u_max, n, symmetric=False):
        self.z_half = z_half
        self.u_max = u_max
        per_particle = 2.0 * z_half * u_max
        # the symmetric variant moves two particles per event
        self.total_rate = n * per_particle * (0.5 if symmetric else 1.0)


def _arrivals(lineage, box, n, t_now, t_target):
    """Yield arrival counts in [t_now, t_target], chunk by chunk.

    Memorylessness lets the clock restart at ``t_target``; the overshooting
    arrival is discarded.
    """
    gen = lineage.stream(rngmod.ARRIVAL)
    t = t_now
    while True:
        times = t + np.cumsum(gen.exponential(1.0 / box.total_rate, CHUNK))
        m = int(np.searchsorted(times, t_target, side="right"))
        if m < CHUNK:
            if m:
                yield m
            return
        yield m
        t = float(times[-1])


def _draw_indices(lineage, n, m):
    i = lineage.stream(rngmod.PARTICLE).integers(0, n, size=m, dtype=np.int64)
    j = lineage.stream(rngmod.PARTNER).integers(0, n - 1, size=m, dtype=np.int64)
    j += j >= i
    return i, j


def _advance(ens, lineage, box, t_target, variants, scheme):
    """Advance one or more ensembles sharing the same event stream up to ``t_target``.

    ``variants`` is a list of ``(ensemble, schedule, params, symmetric)``.
    Returns ``(arrivals, accepted_per_variant)``.
    """
    n = ens.n
    arrivals = 0
    accepted = [0] * len(variants)
    for m in _arrivals(lineage, box, n, ens.time, t_target):
        arrivals += m
        i, j = _draw_indices(lineage, n, m)
        if scheme == "fictive":
            z = (2.0 * lineage.stream(rngmod.ANGLE).random(m) - 1.0) * box.z_half
            u = lineage.stream(rngmod.ACCEPT).random(m) * box.u_max
            for k, (e, sch, prm, sym) in enumerate(variants):
                accepted[k] += _backend.fictive_events(
                    e.velocities, e.running_max, i, j, z, u,
                    sch.epsilon, sch.gamma_eps, prm.gamma, prm.nu, sch.g_zeta, int(sym),
                )
        else:
            uacc = lineage.stream(rngmod.ACCEPT).random(m)
            zpool = (2.0 * lineage.stream(rngmod.ANGLE).random(m) - 1.0) * box.z_half
            for k, (e, sch, prm, sym) in enumerate(variants):
                acc, _ = _backend.real_events(
                    e.velocities, e.running_max, i, j, uacc, zpool,
                    sch.epsilon, sch.gamma_eps, prm.gamma, prm.nu, sch.g_zeta, sch.u_max, int(sym),
                )
                accepted[k] += acc
    for e, *_ in variants:
        e.time = t_target
    lineage.events += arrivals
    return arrivals, accepted


def run(config: SimConfig, replica=0):
    """Simulate one replica; returns a :class:`Trajectory` with a snapshot per requested time."""
    ens = init_ensemble(config.initial_law, config.n, config.seed, replica)
    sch = config.schedule
    box = _Box(sch.z_half_width, sch.u_max, config.n, config.symmetric)
    traj = Trajectory(_snapshot(ens, 0.0), [], sch, {})
    for t in config.snapshot_times:
        a, acc = _advance(ens, ens.lineage, box, t, [(ens, sch, config.params, config.symmetric)], config.scheme)
        traj.arrivals += a
        traj.accepted += acc[0]
        traj.snapshots.append(_snapshot(ens, t))
    traj.lineage = ens.lineage.as_dict()
    return traj


def run_replicas(config: SimConfig, replicas, first_replica=0):
    return [run(config, r) for r in range(first_replica, first_replica + replicas)]


def coupled_run(config: SimConfig, schedules, replica=0):
    """Run several schedules on one common event stream (common random numbers).

    Candidates are drawn in the union of all candidate boxes at the matching
    rate; each variant thins with its own ``phi_eps`` and angular cutoff, so
    every variant keeps its exact law while sharing arrivals, partners,
    angles and acceptance uniforms.
    """
    schedules = list(schedules)
    if len(schedules) < 2:
        raise ConfigError("coupling needs at least two schedules", key="schedules")
    if len({s.eta0 for s in schedules}) != 1:
        raise ConfigError("coupled schedules must share eta0", key="schedules")
    if config.symmetric:
        raise ConfigError("coupled runs use the one-sided jump", key="symmetric")
    base = init_ensemble(config.initial_law, config.n, config.seed, replica)
    box = _Box(max(s.z_half_width for s in schedules), max(s.u_max for s in schedules), config.n)
    ensembles = [base.copy() for _ in schedules]
    variants = [(e, s, config.params, False) for e, s in zip(ensembles, schedules)]
    trajs = [Trajectory(_snapshot(base, 0.0), [], s, {}) for s in schedules]
    for t in config.snapshot_times:
        a, acc = _advance(base, base.lineage, box, t, variants, "fictive")
        base.time = t
        for tr, e, k in zip(trajs, ensembles, acc):
            tr.arrivals += a
            tr.accepted += k
            tr.snapshots.append(_snapshot(e, t))
    for tr in trajs:
        tr.lineage = base.lineage.as_dict()
        tr.extra["box_rate"] = box.total_rate / config.n
    return trajs


# -- regularized observation --------------------------------------------------

@dataclass(frozen=True)
class MollifiedSample:
    f_samples: np.ndarray
    g_weights: np.ndarray


def mollify(snapshot, t, schedule: CutoffSchedule, gen):
    """Gaussian-smoothed positions ``V + sqrt(t zeta^(4+nu)) Z`` with confinement weights.

    ``snapshot`` may be an :class:`Ensemble` or a :class:`Snapshot`.
    """
    if not t > 0.0:
        raise ValueError("t must be positive")
    v = np.asarray(snapshot.velocities, dtype=float)
    sd = math.sqrt(t * schedule.molli_var_coeff)
    f = v + sd * gen.standard_normal(v.shape) if sd > 0.0 else v.copy()
    w = np.atleast_1d(confinement_weight(np.asarray(snapshot.running_max), schedule.gamma_eps))
    return MollifiedSample(f, w)


def with_schedule(config: SimConfig, schedule):
    return replace(config, schedule=schedule)
