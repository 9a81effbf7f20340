"""Compare the compiled pivot kernel against the numpy fallback.

Builds representative best-response LPs for both game variants, solves each
with every available backend, and prints a timing table.  Run, from the
repository root, with the extension built:

    python3 benchmarks/bench_simplex.py [--repeat 3]
"""

import argparse
import time

import numpy as np

import mfg_lpfp._kernels as kern
from mfg_lpfp import build_grid, build_lp_control, build_lp_stopping, builtin_model, random_policy_mean_field
from mfg_lpfp.lp import solve_lp


def cases():
    rng = np.random.default_rng(2024)
    os_model = builtin_model("os_example")
    control = builtin_model("control_example")
    out = []
    for n_t, n_s in ((10, 20), (20, 40), (30, 60)):
        grid = build_grid(1.0, n_t, -11.0, 11.0, n_s)
        mf = random_policy_mean_field(grid, os_model, rng)
        out.append((f"stopping {n_t}x{n_s}", build_lp_stopping(grid, os_model, mf)))
    for n_t, n_s, n_a in ((20, 16, 5), (40, 20, 5)):
        grid = build_grid(1.0, n_t, -2.0, 2.0, n_s, np.linspace(-1, 1, n_a))
        mf = random_policy_mean_field(grid, control, rng)
        out.append((f"control {n_t}x{n_s}x{n_a}", build_lp_control(grid, control, mf)))
    return out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    impls = kern.backends()
    if "c" not in impls:
        print("note: compiled kernel not built; benchmarking the fallback only")
    print(f"{'case':<22}{'rows':>6}{'cols':>7}{'pivots':>8}", *(f"{name:>12}" for name in impls), sep="")
    for label, prog in cases():
        times = {}
        pivots = None
        value = {}
        for name, fn in impls.items():
            kern.pivot_chunk = fn
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                sol = solve_lp(prog)
                best = min(best, time.perf_counter() - t0)
            assert sol.status == "optimal", sol.status
            times[name] = best
            pivots = sol.iterations
            value[name] = sol.objective_value
        kern.pivot_chunk = impls[kern.BACKEND]
        if len(value) == 2 and abs(value["c"] - value["python"]) > 1e-9 * (1 + abs(value["c"])):
            raise SystemExit(f"{label}: backends disagree: {value}")
        cells = "".join(f"{times[name] * 1e3:>10.1f}ms" for name in impls)
        print(f"{label:<22}{prog.n_rows:>6}{prog.n_cols:>7}{pivots:>8}{cells}")
    if len(impls) == 2:
        print("(equal objectives verified across backends)")


if __name__ == "__main__":
    main()
