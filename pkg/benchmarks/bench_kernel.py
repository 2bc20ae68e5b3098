"""Compare the compiled and pure-Python event loops on identical event batches.

    python3 benchmarks/bench_kernel.py [--events 200000] [--n 2000] [--repeat 3]

Both backends receive the same arrays; the script checks that the resulting
velocities agree bit for bit and reports events per second.
"""

import argparse
import time

import numpy as np

from boltzlab import _backend
from boltzlab.kernel import CutoffSchedule, KernelParams


def make_batch(n, m, schedule, seed):
    gen = np.random.default_rng(seed)
    vel = gen.standard_normal((n, 2))
    i = gen.integers(0, n, m, dtype=np.int64)
    j = gen.integers(0, n - 1, m, dtype=np.int64)
    j += j >= i
    z = (2.0 * gen.random(m) - 1.0) * schedule.z_half_width
    u = gen.random(m)
    return vel, i, j, z, u


def time_call(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    params = KernelParams.with_defaults(0.25, 1.0)
    sch = CutoffSchedule.build(params, 0.01, 0.1)
    vel0, i, j, z, u = make_batch(args.n, args.events, sch, args.seed)

    results = {}
    for name, impl in _backend.IMPLEMENTATIONS.items():
        def fictive():
            v, r = vel0.copy(), np.sqrt((vel0 ** 2).sum(1))
            impl.fictive_events(v, r, i, j, z, u * sch.u_max, sch.epsilon, sch.gamma_eps,
                                params.gamma, params.nu, sch.g_zeta, 0)
            return v

        def real():
            v, r = vel0.copy(), np.sqrt((vel0 ** 2).sum(1))
            impl.real_events(v, r, i, j, u, z, sch.epsilon, sch.gamma_eps,
                             params.gamma, params.nu, sch.g_zeta, sch.u_max, 0)
            return v

        tf, vf = time_call(fictive, args.repeat)
        tr, vr = time_call(real, args.repeat)
        results[name] = (tf, tr, vf, vr)
        print(f"{name:>7s}  fictive {args.events / tf:12.0f} ev/s   real {args.events / tr:12.0f} ev/s")

    if "cython" in results:
        py, cy = results["python"], results["cython"]
        same = np.array_equal(py[2], cy[2]) and np.array_equal(py[3], cy[3])
        print(f"speed-up  fictive x{py[0] / cy[0]:.1f}   real x{py[1] / cy[1]:.1f}   bit-identical: {same}")
    else:
        print("compiled core not available; only the pure-Python loop was timed")


if __name__ == "__main__":
    main()
