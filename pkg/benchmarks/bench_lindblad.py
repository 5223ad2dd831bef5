"""Benchmark the master-equation hot loop: numba kernel vs numpy fallback.

Runs the default cascade simulation (24-dimensional density matrix, RK4 at
1 ns steps) on every available backend and reports wall times.  The numba
path pays a one-off compilation that is excluded by a warmup run.

    python benchmarks/bench_lindblad.py [--t-total NS] [--repeats N]
"""

import argparse
import time

from heraldsim import _accel, lindblad
from heraldsim._accel import available_backends
from heraldsim.lindblad import CascadedSystemParams, cascaded_simulate


def time_backend(name, kernel, t_total, repeats):
    saved = _accel.propagate, lindblad.propagate
    _accel.propagate = kernel
    lindblad.propagate = kernel
    try:
        params = CascadedSystemParams()
        cascaded_simulate(1, params, t_total=min(t_total, 100.0))  # warmup/compile
        times = []
        p_click = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            p_click = cascaded_simulate(1, params, t_total=t_total).p_click
            times.append(time.perf_counter() - t0)
        return min(times), p_click
    finally:
        _accel.propagate, lindblad.propagate = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t-total", type=float, default=1500.0, help="window (ns)")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"simulation window {args.t_total:.0f} ns at 1 ns RK4 steps, "
          f"best of {args.repeats}")
    results = {}
    for name, kernel in backends.items():
        best, p_click = time_backend(name, kernel, args.t_total, args.repeats)
        results[name] = (best, p_click)
        print(f"  {name:6s}: {best * 1e3:8.2f} ms   (p_click = {p_click:.6f})")
    if {"numba", "numpy"} <= set(results):
        speedup = results["numpy"][0] / results["numba"][0]
        drift = abs(results["numpy"][1] - results["numba"][1])
        print(f"  numba speedup: {speedup:.1f}x   |p_click drift| = {drift:.2e}")


if __name__ == "__main__":
    main()
