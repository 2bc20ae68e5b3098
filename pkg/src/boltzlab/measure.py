"""Measure-level statistics of particle clouds in the plane."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .errors import FitError

N_BOOT = 1000
BOOT_SEED = 0x5EED
_TILE = 8192


def _points(samples):
    a = np.asarray(samples, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("samples must have shape (n, 2)")
    return a


def _radii(samples):
    a = _points(samples)
    return np.sqrt(np.sum(a * a, axis=1))


def bootstrap(values, stat=np.mean, n_boot=N_BOOT, seed=BOOT_SEED, level=0.95):
    """Nonparametric bootstrap of ``stat`` over the leading axis.

    Returns ``(standard_error, (ci_low, ci_high))``.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    gen = np.random.default_rng(seed)
    reps = np.array([stat(values[gen.integers(0, n, size=n)]) for _ in range(n_boot)])
    lo, hi = np.quantile(reps, [(1.0 - level) / 2.0, (1.0 + level) / 2.0], axis=0)
    return reps.std(axis=0, ddof=1), (lo, hi)


# -- density estimation -------------------------------------------------------

@dataclass
class DensityEstimate:
    grid_x: np.ndarray
    grid_y: np.ndarray
    bandwidth: float
    values: np.ndarray  # shape (len(grid_x), len(grid_y))
    n_samples: int
    weights_used: bool
    radius_q99: float = math.nan

    @property
    def cell_area(self):
        return float((self.grid_x[1] - self.grid_x[0]) * (self.grid_y[1] - self.grid_y[0]))

    def mass(self):
        return float(self.values.sum() * self.cell_area)

    def sup(self):
        return float(self.values.max())

    def radii(self):
        gx, gy = np.meshgrid(self.grid_x, self.grid_y, indexing="ij")
        return np.hypot(gx, gy)

    def to_csv(self, path):
        gx, gy = np.meshgrid(self.grid_x, self.grid_y, indexing="ij")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "density"])
            for x, y, v in zip(gx.ravel(), gy.ravel(), self.values.ravel()):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])


def default_bandwidth(samples):
    """``sigma * n^(-1/6)`` with sigma the root mean per-coordinate variance."""
    a = _points(samples)
    sigma = math.sqrt(0.5 * (a[:, 0].var() + a[:, 1].var()))
    if sigma == 0.0:
        raise ValueError("degenerate sample (zero spread): pass an explicit bandwidth")
    return sigma * a.shape[0] ** (-1.0 / 6.0)


def default_grid(samples, bandwidth, n=128, pad=4.0):
    a = _points(samples)
    lo = a.min(axis=0) - pad * bandwidth
    hi = a.max(axis=0) + pad * bandwidth
    return np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n)


def kde(samples, weights=None, bandwidth=None, grid=None):
    """Gaussian product-kernel density estimate on a rectangular lattice.

    With ``weights`` the kernel sum is divided by the total weight instead of
    the sample count. Samples are reduced tile by tile in a fixed order, so the
    result does not depend on how the work is split.
    """
    a = _points(samples)
    n = a.shape[0]
    if n == 0:
        raise ValueError("kde needs at least one sample")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must be n values in [0, 1]")
        if w.sum() == 0.0:
            raise ValueError("all weights are zero")
    h = default_bandwidth(a) if bandwidth is None else float(bandwidth)
    if not h > 0.0:
        raise ValueError("bandwidth must be positive")
    gx, gy = default_grid(a, h) if grid is None else (np.asarray(grid[0], float), np.asarray(grid[1], float))
    acc = np.zeros((gx.size, gy.size))
    inv = -0.5 / (h * h)
    for s in range(0, n, _TILE):
        blk = a[s:s + _TILE]
        kx = np.exp(inv * (gx[:, None] - blk[None, :, 0]) ** 2) * w[s:s + _TILE]
        ky = np.exp(inv * (gy[:, None] - blk[None, :, 1]) ** 2)
        acc += kx @ ky.T
    values = acc / (2.0 * math.pi * h * h * w.sum())
    q = float(np.quantile(_radii(a), 0.99))
    return DensityEstimate(gx, gy, h, values, n, weights is not None, q)


def density_from_function(func, grid_x, grid_y):
    """Wrap exact density values ``func(x, y)`` on a lattice as a DensityEstimate."""
    gx, gy = np.meshgrid(grid_x, grid_y, indexing="ij")
    return DensityEstimate(np.asarray(grid_x), np.asarray(grid_y), 0.0, func(gx, gy), 0, False)


# -- counting statistics --------------------------------------------------------

def tail_mass(samples, radius_r):
    if radius_r < 0.0:
        raise ValueError("R must be non-negative")
    return float(np.mean(_radii(samples) >= radius_r))


def ball_mass(samples, center_w, radius):
    if not radius > 0.0:
        raise ValueError("radius must be positive")
    d = _points(samples) - np.asarray(center_w, dtype=float)
    return float(np.mean(np.sum(d * d, axis=1) <= radius * radius))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    log_mean: float
    ci_low: float
    ci_high: float


def exp_moment(samples, lambda_prime, n_boot=N_BOOT, seed=BOOT_SEED):
    """Sample mean of ``exp(|v|^lambda')`` computed in log-sum-exp form, with a bootstrap CI."""
    if not 0.0 < lambda_prime < 2.0:
        raise ValueError("lambda' must lie in (0, 2)")
    e = _radii(samples) ** lambda_prime
    n = e.size
    log_mean = float(logsumexp(e) - math.log(n))
    _, (lo, hi) = bootstrap(e, stat=lambda x: logsumexp(x) - math.log(x.size), n_boot=n_boot, seed=seed)
    return MomentEstimate(_exp(log_mean), log_mean, _exp(lo), _exp(hi))


def _exp(x):
    # the log value is the primary output; the linear one saturates to inf
    return math.exp(x) if x < 709.0 else math.inf


# -- regressions ------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    stderr: float
    r2: float
    window: tuple

    def to_dict(self):
        return asdict(self)


def _linfit(x, y, window):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(x) == 0.0:
        raise FitError("regressor is constant over the window")
    res = stats.linregress(x, y)
    r2 = res.rvalue ** 2 if np.isfinite(res.rvalue) else 1.0
    stderr = float(res.stderr) if np.isfinite(res.stderr) else 0.0
    return FitResult(float(res.slope), float(res.intercept), stderr, float(r2), window)


def fit_spatial_decay(estimate: DensityEstimate, lambda_prime, r_min=2.0, r_max=None, floor=1e-300):
    """Fit ``log f(v) ~ c + slope |v|^lambda'`` over the annulus ``r_min <= |v| <= r_max``.

    ``r_max`` defaults to the 99th percentile sample radius stored on the
    estimate, else the largest grid radius.
    """
    r = estimate.radii()
    if r_max is None:
        r_max = estimate.radius_q99 if np.isfinite(estimate.radius_q99) else float(r.max())
    sel = (r >= r_min) & (r <= r_max) & (estimate.values > floor)
    if sel.sum() < 5:
        raise FitError(f"only {int(sel.sum())} usable grid points in annulus [{r_min}, {r_max}]")
    return _linfit(r[sel] ** lambda_prime, np.log(estimate.values[sel]), (float(r_min), float(r_max)))


def fit_time_blowup(sup_values):
    """Slope of ``log sup f_t`` against ``log t``; ``-slope`` is the empirical blow-up exponent."""
    pts = [(float(t), float(s)) for t, s in sup_values]
    if len(pts) < 4:
        raise FitError("need at least four time points")
    if any(not 0.0 < t <= 1.0 for t, _ in pts):
        raise FitError("times must lie in (0, 1]")
    if any(not s > 0.0 for _, s in pts):
        raise FitError("sup values must be positive")
    t, s = np.array(pts).T
    return _linfit(np.log(t), np.log(s), (float(t.min()), float(t.max())))


# -- two-sample tests ------------------------------------------------------------

@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float
    reject: bool


def two_sample_ks(samples_a, samples_b, level=0.01):
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    res = stats.ks_2samp(a, b, method="asymp")
    return KSResult(float(res.statistic), float(res.pvalue), bool(res.pvalue < level))


def ks_planar(samples_a, samples_b, level=0.01):
    """KS on x, y and |v| with a Bonferroni correction over the three tests."""
    a, b = _points(samples_a), _points(samples_b)
    per = level / 3.0
    return {
        "vx": two_sample_ks(a[:, 0], b[:, 0], per),
        "vy": two_sample_ks(a[:, 1], b[:, 1], per),
        "speed": two_sample_ks(_radii(a), _radii(b), per),
    }


_KS_GRID = 4096


def ks_grouped(groups_a, groups_b, level=0.01, n_perm=999, seed=BOOT_SEED):
    """Two-sample KS with a permutation p-value that reshuffles whole groups.

    Samples inside a group (one simulation replica) are correlated, so the
    asymptotic KS p-value of the pooled samples is too small. Permuting group
    labels keeps that structure and gives a valid test at any level. ECDFs are
    compared at up to 4096 pooled quantiles; the observed and permuted
    statistics use the same points, so the test stays exact.
    """
    ga = [np.asarray(g, dtype=float).ravel() for g in groups_a]
    gb = [np.asarray(g, dtype=float).ravel() for g in groups_b]
    if not ga or not gb or any(g.size == 0 for g in ga + gb):
        raise ValueError("both arms need non-empty groups")
    groups = ga + gb
    pooled = np.sort(np.concatenate(groups))
    at = np.unique(pooled[np.linspace(0, pooled.size - 1, min(_KS_GRID, pooled.size)).astype(np.int64)])
    counts = np.array([np.searchsorted(np.sort(g), at, side="right") for g in groups], dtype=float)
    sizes = np.array([g.size for g in groups], dtype=float)
    total, n_all = counts.sum(axis=0), sizes.sum()

    gen = np.random.default_rng(seed)
    base = np.r_[np.ones(len(ga)), np.zeros(len(gb))]
    masks = np.vstack([base] + [gen.permutation(base) for _ in range(n_perm)])
    ca = masks @ counts
    na = (masks @ sizes)[:, None]
    d = np.max(np.abs(ca / na - (total - ca) / (n_all - na)), axis=1)
    p = (1.0 + np.count_nonzero(d[1:] >= d[0] - 1e-12)) / (1.0 + n_perm)
    return KSResult(float(d[0]), float(p), bool(p < level))


def ks_planar_grouped(groups_a, groups_b, level=0.01, n_perm=999, seed=BOOT_SEED):
    """:func:`ks_planar` for replica-grouped samples, with group-permutation p-values."""
    a = [_points(g) for g in groups_a]
    b = [_points(g) for g in groups_b]
    per = level / 3.0
    return {
        "vx": ks_grouped([g[:, 0] for g in a], [g[:, 0] for g in b], per, n_perm, seed),
        "vy": ks_grouped([g[:, 1] for g in a], [g[:, 1] for g in b], per, n_perm, seed),
        "speed": ks_grouped([_radii(g) for g in a], [_radii(g) for g in b], per, n_perm, seed),
    }


# -- coupling errors -------------------------------------------------------------

@dataclass(frozen=True)
class CouplingPoint:
    zeta: float
    mean_error: float
    ci_low: float
    ci_high: float
    stderr: float


def _snap_at(traj, t):
    for s in traj.snapshots:
        if s.t == t:
            return s
    raise ValueError(f"snapshot at t={t} missing: snapshots are misaligned")


def coupling_error_curve(coupled, t, reference=None):
    """Mean ``|V^zeta - V^ref|`` per schedule at time ``t``.

    ``coupled`` is the output of ``coupled_run`` (one list over schedules) or a
    list of such lists, one per replica. The reference defaults to the
    schedule with the smallest zeta. Returns ``(points, slope_fit)`` where the
    fit is log-error against log-zeta over the non-reference schedules
    (None when fewer than two have a positive error).
    """
    if coupled and not isinstance(coupled[0], (list, tuple)):
        coupled = [coupled]
    zetas = [tr.schedule.zeta for tr in coupled[0]]
    ref = int(np.argmin(zetas)) if reference is None else reference
    per_rep = []
    for group in coupled:
        if [tr.schedule.zeta for tr in group] != zetas:
            raise ValueError("replicas do not share the schedule ladder")
        snaps = [_snap_at(tr, t) for tr in group]
        shapes = {s.velocities.shape for s in snaps}
        if len(shapes) != 1:
            raise ValueError("snapshots are misaligned: ensembles differ in size")
        vref = snaps[ref].velocities
        per_rep.append([np.sqrt(np.sum((s.velocities - vref) ** 2, axis=1)).mean() for s in snaps])
    per_rep = np.array(per_rep)
    points = []
    for k, z in enumerate(zetas):
        col = per_rep[:, k]
        if col.size > 1 and np.ptp(col) > 0.0:
            se, (lo, hi) = bootstrap(col)
        else:
            se, lo, hi = 0.0, col.mean(), col.mean()
        points.append(CouplingPoint(float(z), float(col.mean()), float(lo), float(hi), float(se)))
    usable = [p for k, p in enumerate(points) if k != ref and p.mean_error > 0.0]
    fit = None
    if len(usable) >= 2:
        fit = _linfit(np.log([p.zeta for p in usable]), np.log([p.mean_error for p in usable]),
                      (min(p.zeta for p in usable), max(p.zeta for p in usable)))
    return points, fit
