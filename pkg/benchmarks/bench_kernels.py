"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 100 1000 10000] [--repeat 5]

Prints the best-of-repeat time per call for every kernel and size, then the
wall time of one small scenario under each backend (the scenario part runs in
subprocesses so the backend flag is read fresh).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from trigmon import kernels

SCENARIO = (
    "import time; from trigmon.sim import ScenarioConfig, run_scenario;"
    "cfg = ScenarioConfig(num_agents=10, duration_seconds=1000, seed=1);"
    "run_scenario(ScenarioConfig(num_agents=1, duration_seconds=150));"
    "t = time.perf_counter(); run_scenario(cfg); print(time.perf_counter() - t)"
)


def cases(n, rng):
    x = np.round(rng.standard_normal(n), 1)  # rounded so ties occur
    a, b = x[: n // 2].copy(), x[n // 2:].copy()
    sa, sb = np.sort(a), np.sort(b)
    return {
        "rank_ties": (x,),
        "u_and_variance": (a, b),
        "split_profile": (x, max(1, n // 10)),
        "ks_sorted": (sa, sb),
    }


def time_call(fn, args, repeat):
    fn(*args)  # compile / warm
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def bench_scenario(disable):
    env = dict(os.environ)
    env.pop("TRIGMON_DISABLE_NUMBA", None)
    if disable:
        env["TRIGMON_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCENARIO], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--no-scenario", action="store_true")
    args = parser.parse_args(argv)

    if kernels.numba_kernels is None:
        print("numba unavailable or disabled; only the numpy backend can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>8}{'numpy us':>12}{'numba us':>12}{'speedup':>9}")
    for n in args.sizes:
        for name, call_args in cases(n, rng).items():
            t_np = time_call(kernels.numpy_kernels[name], call_args, args.repeat)
            if kernels.numba_kernels is None:
                print(f"{name:<16}{n:>8}{t_np * 1e6:>12.1f}{'-':>12}{'-':>9}")
                continue
            t_nb = time_call(kernels.numba_kernels[name], call_args, args.repeat)
            print(f"{name:<16}{n:>8}{t_np * 1e6:>12.1f}{t_nb * 1e6:>12.1f}{t_np / t_nb:>8.1f}x")

    if not args.no_scenario:
        t_nb = bench_scenario(disable=False)
        t_np = bench_scenario(disable=True)
        print(f"\nscenario (10 agents x 1000 obs): numpy {t_np:.2f} s, numba {t_nb:.2f} s, speedup {t_np / t_nb:.1f}x")


if __name__ == "__main__":
    main()
