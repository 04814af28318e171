"""Compare the compiled and numpy box-kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--sizes 100 300 500] [--r 100] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from funcsurvey import kernels
from funcsurvey.hetero import bandwidth_candidates, chebyshev_distances, eta_slope_estimate, standardize
from funcsurvey.population import Grid


def setup(n, r, seed=0):
    g = np.random.default_rng(seed)
    X = g.gamma(25.0, 20.0, n)
    cov = standardize(np.column_stack([X, X]))
    dist = chebyshev_distances(cov)
    resp = 1000 + X[:, None] + np.cumsum(g.normal(size=(n, r)), axis=1) / np.sqrt(r)
    return dist, resp, bandwidth_candidates(dist)


def _slope(resp, dist, impl):
    # the full estimator with the backend swapped in
    saved = kernels._impl
    kernels._impl = impl
    try:
        n = resp.shape[0]
        X = np.exp(np.linspace(5.5, 6.9, n))
        eta_slope_estimate(resp, X, X, Grid(1.0, resp.shape[1]))
    finally:
        kernels._impl = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 500])
    ap.add_argument("--r", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    impls = {"python": kernels.backend("python")}
    try:
        impls["cython"] = kernels.backend("cython")
    except ImportError:
        print("compiled backend not built; timing the fallback only")

    print(f"{'kernel':<14}{'n':>6}" + "".join(f"{k:>12}" for k in impls) + f"{'speedup':>10}")
    for n in args.sizes:
        dist, resp, cands = setup(n, args.r)
        h_one = np.full(args.r, cands[len(cands) // 2])
        # per-node bandwidths as LOOCV produces them: spread over the candidate grid
        h_mixed = np.random.default_rng(1).choice(cands, size=args.r)
        jobs = {
            "box_cv_scores": lambda impl: kernels.box_cv_scores(dist, resp, cands, impl=impl),
            "means(1 h)": lambda impl: kernels.box_means(dist, resp, h_one, loo=True, impl=impl),
            "means(mixed)": lambda impl: kernels.box_means(dist, resp, h_mixed, loo=True, impl=impl),
            "slope eta": lambda impl: _slope(resp, dist, impl),
        }
        rows = [(name, {k: (lambda job=job, m=m: job(m)) for k, m in impls.items()}) for name, job in jobs.items()]
        if "cython" in impls:
            # the compiled bucket walk against the BLAS means that both backends export
            walk = impls["cython"].box_means_buckets
            blas = impls["python"].box_means
            for label, h in (("buckets(1 h)", h_one), ("buckets(mixed)", h_mixed)):
                rows.append((label, {"python": lambda h=h: blas(dist, resp, h, True),
                                     "cython": lambda h=h: walk(dist, resp, h, True)}))
        for name, fns in rows:
            times = {k: min(timeit.repeat(f, number=1, repeat=args.repeat)) for k, f in fns.items()}
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{name:<14}{n:>6}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
