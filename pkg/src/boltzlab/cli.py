"""Command line entry point.

Subcommands::

    boltzlab exponents  --gamma G --nu V | --s S
    boltzlab simulate   [--config FILE|JSON] [overrides...] [--out DIR]
    boltzlab analyze    SNAPSHOTS.csv [--config FILE|JSON] [--out DIR]
    boltzlab verify     [--profile quick|full] [--seed N] [--out DIR]

Exit codes: 0 success, 2 configuration or input error, 3 verification failure.
The default output directory is taken from ``BOLTZLAB_OUT``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, _backend, measure, verify
from . import exponents as ex
from . import simulator as sim
from .config import OUT_ENV, OutputSection, parse_config
from .errors import ConfigError, FitError
from .kernel import KernelParams, confinement_weight

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3

SNAPSHOT_COLUMNS = ("replica", "t", "particle", "vx", "vy", "running_max")
_REQUIRED_COLUMNS = ("replica", "t", "particle", "vx", "vy")


def _g(x):
    return f"{x:.17g}"


def _out_dir(args):
    return Path(args.out or os.environ.get(OUT_ENV) or OutputSection.dir)


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n")


# -- exponents --------------------------------------------------------------

def _exponent_params(args):
    if args.s is not None:
        if args.gamma is not None or args.nu is not None:
            raise ConfigError("give either --s or --gamma/--nu, not both", key="s")
        if not args.s > 5.0:
            raise ConfigError("the planar reduction needs s > 5 (gamma > 0)", key="s")
        m = ex.from_dimension3(args.s)
        return m, KernelParams.with_defaults(m.nu, m.gamma, args.lambda_moment, args.lambda_prime)
    if args.gamma is None or args.nu is None:
        raise ConfigError("--gamma and --nu are required (or give --s)", key="gamma")
    return None, KernelParams.with_defaults(args.nu, args.gamma, args.lambda_moment, args.lambda_prime)


def _fmt(x):
    if x is None:
        return "absent"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def cmd_exponents(args):
    mapping, params = _exponent_params(args)
    report = ex.regime_report(params, k_max=args.k_max)
    d = report.to_dict()
    if mapping is not None:
        d["dimension3"] = {"s": mapping.s, "nu": mapping.nu, "gamma": mapping.gamma,
                           "density_regime": mapping.density_regime, "full_regime": mapping.full_regime,
                           "full_s_threshold": ex.FULL_S_THRESHOLD}
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        if mapping is not None:
            print(f"s = {mapping.s:g}  ->  nu = {mapping.nu:.10g}, gamma = {mapping.gamma:.10g}")
            print(f"  s > 9 (density regime):             {mapping.density_regime}")
            print(f"  s > 16 + sqrt(193) (full regime):   {mapping.full_regime}")
        print(f"nu = {params.nu:g}, gamma = {params.gamma:g}   regime: {report.regime.value}")
        for key in ("phi0", "phi2", "alpha_star", "k_star", "eta", "kappa", "p1", "p2", "chi"):
            print(f"  {key:<11s} {_fmt(d[key])}")
        if report.alpha_seq:
            print(f"  bootstrap   {len(report.alpha_seq) - 1} steps, alpha_last = {report.alpha_seq[-1]:.10g}")
        for k, note in report.notes.items():
            print(f"  note[{k}]: {note}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "exponents.json", d)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

def _config_dict(args):
    if args.config:
        text = args.config
        if not text.lstrip().startswith("{"):
            try:
                text = Path(text).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config file: {exc}", key="config") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}", key="config") from exc
        if not isinstance(raw, dict):
            raise ConfigError("expected a JSON object", key="config")
        raw.pop("derived", None)
    else:
        raw = {}
    kern = raw.setdefault("kernel", {})
    for flag, key in (("gamma", "gamma"), ("nu", "nu"), ("lambda_moment", "lambda"), ("lambda_prime", "lambda_prime")):
        if getattr(args, flag, None) is not None:
            kern[key] = getattr(args, flag)
    sched_flags = {k: getattr(args, k, None) for k in ("epsilon", "zeta", "eta0")}
    if any(v is not None for v in sched_flags.values()):
        if "schedules" in raw:
            raise ConfigError("schedule flags cannot override a multi-schedule config", key="schedules")
        sch = raw.setdefault("schedule", {})
        for k, v in sched_flags.items():
            if v is not None:
                sch[k] = v
        if sched_flags["zeta"] is not None:
            sch.pop("alpha", None)
    simd = raw.setdefault("sim", {})
    for flag, key in (("n", "n"), ("t_end", "t_end"), ("seed", "seed"), ("scheme", "scheme"),
                      ("replicas", "replicas"), ("first_replica", "first_replica")):
        if getattr(args, flag, None) is not None:
            simd[key] = getattr(args, flag)
    if getattr(args, "snapshots", None):
        simd["snapshots"] = [float(t) for t in args.snapshots.split(",")]
    elif getattr(args, "t_end", None) is not None and "snapshots" in simd:
        simd["snapshots"] = [t for t in simd["snapshots"] if t <= args.t_end] or [args.t_end]
    if getattr(args, "law", None):
        try:
            simd["initial_law"] = json.loads(args.law)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}", key="sim.initial_law") from exc
    out = raw.setdefault("output", {})
    if args.out:
        out["dir"] = args.out
    return raw


def _run_one(job):
    config, replica = job
    return sim.run(config, replica)


def _run_replicas(config, replicas, jobs):
    jobs_list = [(config, r) for r in replicas]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, jobs_list))
    return [_run_one(j) for j in jobs_list]


def write_snapshots(path, trajectories, include_initial=True):
    """One row per particle and snapshot; floats with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_COLUMNS)
        for tr in trajectories:
            rep = tr.lineage["replica"]
            snaps = ([tr.initial] if include_initial else []) + list(tr.snapshots)
            for s in snaps:
                t = _g(s.t)
                for k, ((vx, vy), m) in enumerate(zip(s.velocities.tolist(), s.running_max.tolist())):
                    w.writerow((rep, t, k, _g(vx), _g(vy), _g(m)))


def cmd_simulate(args):
    rc = parse_config(_config_dict(args))
    if len(rc.schedules) != 1:
        raise ConfigError("simulate runs one schedule; use a single 'schedule' entry", key="schedules")
    config = rc.sim_config(0)
    out = Path(rc.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}", key="output.dir") from exc

    t0 = time.perf_counter()
    reps = range(rc.sim.first_replica, rc.sim.first_replica + rc.sim.replicas)
    trajs = _run_replicas(config, reps, args.jobs)
    wall = time.perf_counter() - t0

    if "csv" in rc.output.formats:
        write_snapshots(out / "snapshots.csv", trajs)
    manifest = {
        "version": __version__,
        "backend": _backend.BACKEND,
        "config": rc.to_dict(),
        "gamma_eps": config.schedule.gamma_eps,
        "rate": config.schedule.rate,
        "replicas": [
            {"lineage": tr.lineage, "arrivals": tr.arrivals, "accepted": tr.accepted,
             "expected_arrivals": config.n * config.schedule.rate * config.t_end}
            for tr in trajs
        ],
        "wall_clock_s": wall,
    }
    if "json" in rc.output.formats:
        _write_json(out / "manifest.json", manifest)
    total = sum(tr.arrivals for tr in trajs)
    print(f"simulated {len(trajs)} replica(s) x {config.n} particles to t = {config.t_end:g}: "
          f"{total} candidate events, {wall:.2f}s ({_backend.BACKEND} backend) -> {out}")
    return EXIT_OK


# -- analyze ----------------------------------------------------------------

def read_snapshots(path):
    """Return ``{t: (velocities, running_max or None)}`` pooled over replicas."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read snapshot file: {exc}", key="snapshots") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError("file is empty", key="snapshots")
        for col in _REQUIRED_COLUMNS:
            if col not in header:
                raise ConfigError(f"missing column '{col}' in {path}", key=col)
        idx = {c: header.index(c) for c in header}
        has_max = "running_max" in idx
        rows = {}
        for line, row in enumerate(reader, start=2):
            try:
                t = float(row[idx["t"]])
                v = (float(row[idx["vx"]]), float(row[idx["vy"]]))
                m = float(row[idx["running_max"]]) if has_max else math.nan
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"bad value on line {line}: {exc}", key="snapshots") from exc
            rows.setdefault(t, ([], []))
            rows[t][0].append(v)
            rows[t][1].append(m)
    if not rows:
        raise ConfigError("no data rows", key="snapshots")
    return {t: (np.array(v), np.array(m) if has_max else None) for t, (v, m) in sorted(rows.items())}


def _analysis_config(args, csv_path):
    """Config from --config, else from a manifest next to the snapshot file, else None."""
    if args.config:
        return parse_config(_config_dict(argparse.Namespace(**{**vars(args), "out": None, "snapshots": None})))
    manifest = Path(csv_path).with_name("manifest.json")
    if manifest.exists():
        try:
            cfg = json.loads(manifest.read_text())["config"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"unreadable manifest {manifest}: {exc}", key="config") from exc
        cfg.pop("derived", None)
        return parse_config(cfg)
    return None


def cmd_analyze(args):
    data = read_snapshots(args.snapshots)
    rc = _analysis_config(args, args.snapshots)
    lam_p = args.lambda_prime
    if lam_p is None and rc is not None:
        lam_p = rc.analysis.lambda_prime or rc.kernel.lambda_prime
    if lam_p is None:
        lam_p = 1.0
    grid_n = args.grid_n or (rc.analysis.grid_n if rc else 128)
    bandwidth = args.bandwidth or (rc.analysis.bandwidth if rc else None)
    r_min = args.r_min if args.r_min is not None else (rc.analysis.r_min if rc else 2.0)
    gamma_eps = rc.schedules[0].gamma_eps if rc is not None else None

    out = _out_dir(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}", key="out") from exc

    radii = np.arange(0.5, 8.0 + 1e-9, 0.5)
    tails, fits, sups = [], {}, []
    for t, (v, rmax) in data.items():
        tag = f"t{t:g}"
        entry = {"t": t, "n": int(v.shape[0])}
        est = None
        try:
            h = bandwidth or measure.default_bandwidth(v)
            grid = measure.default_grid(v, h, n=grid_n)
            raw = measure.kde(v, bandwidth=h, grid=grid)
            raw.to_csv(out / f"density_{tag}.csv")
            est = raw
            if rmax is not None and gamma_eps is not None:
                w = np.atleast_1d(confinement_weight(rmax, gamma_eps))
                est = measure.kde(v, weights=w, bandwidth=h, grid=grid)
                est.to_csv(out / f"density_weighted_{tag}.csv")
                entry["min_weight"] = float(w.min())
            entry["kde_sup"] = est.sup()
            entry["kde_mass"] = est.mass()
            if t > 0.0:
                sups.append((t, est.sup()))
        except ValueError as exc:
            entry["kde_error"] = str(exc)
        if est is not None:
            try:
                entry["spatial_fit"] = measure.fit_spatial_decay(est, lam_p, r_min=r_min).to_dict()
            except FitError as exc:
                entry["spatial_fit_error"] = str(exc)
                print(f"warning: t={t:g}: spatial fit failed: {exc}", file=sys.stderr)
        m = measure.exp_moment(v, lam_p)
        entry["exp_moment"] = {"mean": m.mean, "log_mean": m.log_mean, "ci": [m.ci_low, m.ci_high]}
        for r in radii:
            tails.append((t, r, measure.tail_mass(v, r)))
        fits[tag] = entry

    with open(out / "tails.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "R", "tail_mass"))
        for t, r, m in tails:
            w.writerow((_g(t), _g(r), _g(m)))
    summary = {"lambda_prime": lam_p, "weighted": gamma_eps is not None, "snapshots": fits}
    early = [(t, s) for t, s in sups if t <= 1.0]
    try:
        bl = measure.fit_time_blowup(early)
        summary["time_blowup"] = {**bl.to_dict(), "eta_empirical": -bl.slope}
    except FitError as exc:
        summary["time_blowup_error"] = str(exc)
    _write_json(out / "analysis.json", summary)
    print(f"analyzed {len(data)} snapshot time(s) -> {out}")
    return EXIT_OK


# -- verify -----------------------------------------------------------------

def cmd_verify(args):
    only = None
    if args.only:
        only = {c.strip().upper() for c in args.only.split(",") if c.strip()}
        unknown = only - set(verify.CRITERIA)
        if unknown:
            raise ConfigError(f"unknown criteria {sorted(unknown)}", key="only")
    profile = verify.PROFILES[args.profile]
    t0 = time.perf_counter()
    verdicts = verify.run_all(profile, only=only, seed=args.seed, on_result=lambda v: print(v.line(), flush=True))
    total = time.perf_counter() - t0
    failed = [v.cid for v in verdicts if not v.passed]
    print(f"{len(verdicts) - len(failed)}/{len(verdicts)} criteria passed in {total:.1f}s (profile {profile.name})")
    if total > profile.budget_s:
        print(f"warning: profile {profile.name} exceeded its {profile.budget_s:.0f}s budget", file=sys.stderr)
    report = {"profile": profile.name, "seed": args.seed, "backend": _backend.BACKEND,
              "seconds": total, "passed": not failed, "criteria": [v.to_dict() for v in verdicts]}
    if args.json:
        print(json.dumps(report, indent=2))
    if args.out or os.environ.get(OUT_ENV):
        out = _out_dir(args)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc}", key="out") from exc
        _write_json(out / "verify.json", report)
    return EXIT_VERIFY if failed else EXIT_OK


# -- parser -----------------------------------------------------------------

def _kernel_flags(p):
    p.add_argument("--gamma", type=float, help="hard-potential exponent, 0 < gamma <= 1")
    p.add_argument("--nu", type=float, help="angular singularity, 0 < nu < 1/2")
    p.add_argument("--lambda", dest="lambda_moment", type=float, help="moment exponent, gamma < lambda < 2")
    p.add_argument("--lambda-prime", dest="lambda_prime", type=float, help="tail exponent, 0 < lambda' < lambda")


def _run_flags(p):
    p.add_argument("--config", help="config file or inline JSON")
    _kernel_flags(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--zeta", type=float)
    p.add_argument("--eta0", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="boltzlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="regime classification and exponent report")
    _kernel_flags(p)
    p.add_argument("--s", type=float, help="three-dimensional inverse-power exponent")
    p.add_argument("--k-max", type=int, default=64)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--out", help="also write exponents.json here")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("simulate", help="run the particle system and dump snapshots")
    _run_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--snapshots", help="comma-separated snapshot times")
    p.add_argument("--seed", type=int)
    p.add_argument("--scheme", choices=sim.SCHEMES)
    p.add_argument("--replicas", type=int)
    p.add_argument("--first-replica", type=int)
    p.add_argument("--law", help="initial law as JSON, e.g. '{\"kind\": \"dirac\", \"v0\": [1, 0]}'")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replicas")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or {OutputSection.dir})")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="densities, tails and fits from a snapshot CSV")
    p.add_argument("snapshots", help="CSV written by 'simulate'")
    _run_flags(p)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--r-min", type=float)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or {OutputSection.dir})")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--profile", choices=sorted(verify.PROFILES), default="quick")
    p.add_argument("--seed", type=int, default=verify.SEED)
    p.add_argument("--only", help="comma-separated criterion ids, e.g. A1,A7")
    p.add_argument("--json", action="store_true", help="print the full JSON report")
    p.add_argument("--out", help="write verify.json here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
