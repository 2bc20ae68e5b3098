"""Run configuration: JSON schema, validation and derived constants.

Schema (keys in brackets are optional)::

    {
      "kernel":   {"nu", "gamma", ["lambda"], ["lambda_prime"]},
      "schedule": {"epsilon", ["zeta"] | ["alpha"], ["eta0"]}      # or
      "schedules": [ {...}, ... ],
      ["sim"]:    {["n"], ["t_end"], ["snapshots"], ["scheme"], ["replicas"],
                   ["first_replica"], ["seed"], ["initial_law"], ["symmetric"]},
      ["analysis"]: {["grid_n"], ["bandwidth"], ["lambda_prime"], ["r_min"]},
      ["output"]: {["dir"], ["formats"]},
      ["derived"]: ...                                             # ignored on input
    }

A schedule gives either ``zeta`` directly or ``alpha``, in which case
``zeta = epsilon^((1 + gamma + alpha) / (1 - nu))``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .kernel import CutoffSchedule, KernelParams, zeta_alpha
from .simulator import SCHEMES, SimConfig, gaussian, validate_law

OUT_ENV = "BOLTZLAB_OUT"

_TOP = {"kernel", "schedule", "schedules", "sim", "analysis", "output", "derived"}
_KERNEL = {"nu", "gamma", "lambda", "lambda_prime"}
_SCHED = {"epsilon", "zeta", "alpha", "eta0"}
_SIM = {"n", "t_end", "snapshots", "scheme", "replicas", "first_replica", "seed", "initial_law", "symmetric"}
_ANALYSIS = {"grid_n", "bandwidth", "lambda_prime", "r_min"}
_OUTPUT = {"dir", "formats"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError("expected a JSON object", key=where)
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"unknown key (allowed: {sorted(allowed)})", key=f"{where}.{k}" if where else k)


def _num(obj, key, where, default=None, kind=float):
    if key not in obj or obj[key] is None:
        if default is None:
            raise ConfigError("missing required value", key=f"{where}.{key}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", key=f"{where}.{key}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"expected an integer, got {v!r}", key=f"{where}.{key}")
        return int(v)
    return float(v)


@dataclass(frozen=True)
class ScheduleSpec:
    epsilon: float
    zeta: float | None = None
    alpha: float | None = None
    eta0: float | None = None

    def resolve_zeta(self, params):
        if self.zeta is not None:
            return self.zeta
        return zeta_alpha(self.epsilon, params.gamma, params.nu, self.alpha)

    def build(self, params):
        return CutoffSchedule.build(params, self.epsilon, self.resolve_zeta(params), self.eta0)

    def to_dict(self):
        return {k: v for k, v in (("epsilon", self.epsilon), ("zeta", self.zeta), ("alpha", self.alpha), ("eta0", self.eta0)) if v is not None}


@dataclass(frozen=True)
class SimSection:
    n: int = 1000
    t_end: float = 1.0
    snapshots: tuple = (1.0,)
    scheme: str = "fictive"
    replicas: int = 1
    first_replica: int = 0
    seed: int = 0
    initial_law: dict = field(default_factory=gaussian)
    symmetric: bool = False


@dataclass(frozen=True)
class AnalysisSection:
    grid_n: int = 128
    bandwidth: float | None = None
    lambda_prime: float | None = None
    r_min: float = 2.0


@dataclass(frozen=True)
class OutputSection:
    dir: str = "boltzlab-out"
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelParams
    schedule_specs: tuple
    schedules: tuple
    sim: SimSection
    analysis: AnalysisSection
    output: OutputSection

    def sim_config(self, index=0):
        s = self.sim
        return SimConfig(self.kernel, self.schedules[index], s.n, s.t_end, s.snapshots, s.initial_law,
                         seed=s.seed, scheme=s.scheme, symmetric=s.symmetric)

    def derived(self):
        out = []
        for entry, sch in zip(self.schedule_specs, self.schedules):
            out.append({
                "zeta": sch.zeta,
                "zeta_alpha": entry.alpha is not None,
                "eta0": sch.eta0,
                "gamma_eps": sch.gamma_eps,
                "rate": sch.rate,
                "g_zeta": sch.g_zeta,
                "u_max": sch.u_max,
                "molli_var_coeff": sch.molli_var_coeff,
            })
        return {"schedules": out}

    def to_dict(self):
        k = self.kernel
        d = {
            "kernel": {"nu": k.nu, "gamma": k.gamma, "lambda": k.lambda_moment, "lambda_prime": k.lambda_prime},
            "schedules": [s.to_dict() for s in self.schedule_specs],
            "sim": {
                "n": self.sim.n,
                "t_end": self.sim.t_end,
                "snapshots": list(self.sim.snapshots),
                "scheme": self.sim.scheme,
                "replicas": self.sim.replicas,
                "first_replica": self.sim.first_replica,
                "seed": self.sim.seed,
                "initial_law": self.sim.initial_law,
                "symmetric": self.sim.symmetric,
            },
            "analysis": {
                "grid_n": self.analysis.grid_n,
                "bandwidth": self.analysis.bandwidth,
                "lambda_prime": self.analysis.lambda_prime,
                "r_min": self.analysis.r_min,
            },
            "output": {"dir": self.output.dir, "formats": list(self.output.formats)},
            "derived": self.derived(),
        }
        return d

    def to_json(self):
        # repr-based float output is the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=2)


def _parse_schedule(obj, where):
    _check_keys(obj, _SCHED, where)
    eps = _num(obj, "epsilon", where)
    zeta = obj.get("zeta")
    alpha = obj.get("alpha")
    if (zeta is None) == (alpha is None):
        raise ConfigError("give exactly one of 'zeta' or 'alpha'", key=f"{where}.zeta")
    return ScheduleSpec(
        epsilon=eps,
        zeta=None if zeta is None else _num(obj, "zeta", where),
        alpha=None if alpha is None else _num(obj, "alpha", where),
        eta0=None if obj.get("eta0") is None else _num(obj, "eta0", where),
    )


def parse_config(source):
    """Parse and validate a configuration.

    ``source`` is a dict, a JSON string, or a path to a JSON file.
    """
    if isinstance(source, dict):
        raw = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            try:
                text = Path(text).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}", key="path") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
    _check_keys(raw, _TOP, "")
    if "kernel" not in raw:
        raise ConfigError("missing required section", key="kernel")
    kobj = raw["kernel"]
    _check_keys(kobj, _KERNEL, "kernel")
    nu = _num(kobj, "nu", "kernel")
    gamma = _num(kobj, "gamma", "kernel")
    lam = kobj.get("lambda")
    lamp = kobj.get("lambda_prime")
    try:
        kernel = KernelParams.with_defaults(nu, gamma, lam, lamp)
    except ConfigError as exc:
        raise ConfigError(exc.detail, key=f"kernel.{exc.key}") from exc

    if ("schedule" in raw) == ("schedules" in raw):
        raise ConfigError("give exactly one of 'schedule' or 'schedules'", key="schedule")
    if "schedule" in raw:
        specs = (_parse_schedule(raw["schedule"], "schedule"),)
    else:
        if not isinstance(raw["schedules"], list) or not raw["schedules"]:
            raise ConfigError("expected a non-empty list", key="schedules")
        specs = tuple(_parse_schedule(o, f"schedules[{i}]") for i, o in enumerate(raw["schedules"]))
    schedules = []
    for i, entry in enumerate(specs):
        try:
            schedules.append(entry.build(kernel))
        except ConfigError as exc:
            where = "schedule" if "schedule" in raw else f"schedules[{i}]"
            raise ConfigError(exc.detail, key=f"{where}.{exc.key}") from exc

    sobj = raw.get("sim", {})
    _check_keys(sobj, _SIM, "sim")
    d = SimSection()
    t_end = _num(sobj, "t_end", "sim", d.t_end)
    snaps = sobj.get("snapshots", [t_end])
    if not isinstance(snaps, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in snaps):
        raise ConfigError("expected a list of times", key="sim.snapshots")
    scheme = sobj.get("scheme", d.scheme)
    if scheme not in SCHEMES:
        raise ConfigError(f"must be one of {SCHEMES}", key="sim.scheme")
    law = sobj.get("initial_law", d.initial_law)
    validate_law(law, key="sim.initial_law")
    symmetric = sobj.get("symmetric", False)
    if not isinstance(symmetric, bool):
        raise ConfigError("expected true or false", key="sim.symmetric")
    sim = SimSection(
        n=_num(sobj, "n", "sim", d.n, int),
        t_end=t_end,
        snapshots=tuple(float(t) for t in snaps),
        scheme=scheme,
        replicas=_num(sobj, "replicas", "sim", d.replicas, int),
        first_replica=_num(sobj, "first_replica", "sim", 0, int),
        seed=_num(sobj, "seed", "sim", d.seed, int),
        initial_law=law,
        symmetric=symmetric,
    )
    if sim.n < 2:
        raise ConfigError("need at least two particles", key="sim.n")
    if sim.replicas < 1:
        raise ConfigError("need at least one replica", key="sim.replicas")
    if sim.first_replica < 0:
        raise ConfigError("must be non-negative", key="sim.first_replica")
    if sim.seed < 0:
        raise ConfigError("must be non-negative", key="sim.seed")
    if not sim.t_end > 0.0:
        raise ConfigError("must be positive", key="sim.t_end")
    ts = sim.snapshots
    if not ts or ts[0] <= 0.0 or ts[-1] > sim.t_end or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("snapshot times must be strictly increasing in (0, t_end]", key="sim.snapshots")

    aobj = raw.get("analysis", {})
    _check_keys(aobj, _ANALYSIS, "analysis")
    analysis = AnalysisSection(
        grid_n=_num(aobj, "grid_n", "analysis", 128, int),
        bandwidth=None if aobj.get("bandwidth") is None else _num(aobj, "bandwidth", "analysis"),
        lambda_prime=None if aobj.get("lambda_prime") is None else _num(aobj, "lambda_prime", "analysis"),
        r_min=_num(aobj, "r_min", "analysis", 2.0),
    )
    if analysis.bandwidth is not None and not analysis.bandwidth > 0.0:
        raise ConfigError("must be positive", key="analysis.bandwidth")

    oobj = raw.get("output", {})
    _check_keys(oobj, _OUTPUT, "output")
    out_dir = oobj.get("dir") or os.environ.get(OUT_ENV) or OutputSection.dir
    formats = tuple(oobj.get("formats", OutputSection.formats))
    for f in formats:
        if f not in ("csv", "json"):
            raise ConfigError(f"unknown format {f!r}", key="output.formats")
    return RunConfig(kernel, specs, tuple(schedules), sim, analysis, OutputSection(str(out_dir), formats))
