"""Time the compiled and pure-Python Gibbs kernels on the same chains.

Usage: python benchmarks/bench_kernels.py [--T 250] [--sweeps 2000] [--repeat 3]

Both backends are seeded identically, so the script also confirms that they
return the same draws.
"""
import argparse
import time

import numpy as np

from ppmvar import gibbs_mean as gm, gibbs_variance as gv, kernels
from ppmvar.mcmc import MCMCConfig
from ppmvar.outliers import detect_outliers


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=250)
    ap.add_argument("--sweeps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    y = np.random.default_rng(0).normal(0.0, 0.01, args.T)
    y[[10, args.T // 2]] += 0.08
    mcmc = MCMCConfig(args.sweeps, args.sweeps // 10, 1)
    jobs = {
        "mean sampler": lambda b: gm.run_chain(y, mcmc=mcmc, store=False, fit_scale=100.0, backend=b).sigma_sq,
        "variance sampler": lambda b: gv.run_chain(y, mcmc=mcmc, store=False, fit_scale=100.0, backend=b).scale,
    }
    backends = kernels.available_backends()
    print(f"T={args.T} sweeps={args.sweeps} backends={', '.join(backends)} default={kernels.BACKEND}")
    print(f"{'job':<18}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'identical':>11}")
    for name, job in jobs.items():
        times, outs = [], []
        for b in backends:
            t, out = best_time(lambda: job(b), args.repeat)
            times.append(t)
            outs.append(out)
        speedup = times[-1] / times[0] if len(times) > 1 else 1.0
        same = all(np.array_equal(outs[0], o) for o in outs[1:])
        print(f"{name:<18}" + "".join(f"{t:>11.3f}s" for t in times) + f"{speedup:>9.1f}x{str(same):>11}")

    short = y[:100]
    kw = dict(mcmc_full=MCMCConfig(2000, 200, 1), mcmc_conditional=MCMCConfig(500, 50, 1))
    for workers in (1, 4):
        t, _ = best_time(lambda: detect_outliers(short, workers=workers, **kw), 1)
        print(f"outlier search T=100, workers={workers}: {t:.3f}s ({kernels.BACKEND})")


if __name__ == "__main__":
    main()
