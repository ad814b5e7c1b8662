"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs the same workloads in two subprocesses, one per backend (the backend
is fixed at import time by STOCHPLAN_BACKEND), and prints a speedup table.

    python3 benchmarks/bench_kernels.py            # compare both backends
    STOCHPLAN_BACKEND=numpy python3 benchmarks/bench_kernels.py --inner
"""

import argparse
import json
import os
import subprocess
import sys
import time


def workloads():
    import numpy as np

    from stochplan import kernels, presets, trajopt
    from stochplan.feedback import default_weights, lqr_gains
    from stochplan.models import linearize
    from stochplan.montecarlo import NoiseStream

    kernels.warmup()
    sc = presets.load("car_single")
    model, cost = sc.model, sc.cost
    prob = trajopt.OcpProblem(model=model, cost=cost, x0=sc.x0,
                              horizon=sc.horizon)
    sol = trajopt.solve_ocp(prob)
    lin = linearize(model, sol.states, sol.controls)
    gains = lqr_gains(lin, default_weights(cost))
    noise = NoiseStream(0, model.u_max).matrix(sc.horizon)
    ca = cost.kernel_args()

    def bench(fn, repeat):
        fn()  # one untimed call
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        return (time.perf_counter() - t0) / repeat

    items = [
        ("rollout", 2000, lambda: kernels.rollout(
            model.model_id, model.params, model.dt, sc.x0, sol.controls)),
        ("linearize_seq", 1000, lambda: kernels.linearize_seq(
            model.model_id, model.params, model.dt, sol.states, sol.controls)),
        ("cost_derivs_seq", 1000, lambda: kernels.cost_derivs_seq(
            sol.states, sol.controls, *ca)),
        ("ilqr_backward", 1000, lambda: kernels.ilqr_backward(
            lin.A, lin.B, *kernels.cost_derivs_seq(sol.states, sol.controls, *ca),
            0.0)),
        ("riccati_lqr", 1000, lambda: kernels.riccati_lqr(
            lin.A, lin.B, np.eye(4), np.eye(2), np.eye(4))),
        ("tracking_rollout", 2000, lambda: kernels.tracking_rollout(
            model.model_id, model.params, model.dt, sol.states, sol.controls,
            gains.L, sc.x0, noise, 0.4, model.u_min, model.u_max)),
        ("solve_ocp (cold)", 5, lambda: trajopt.solve_ocp(prob)),
    ]
    return {name: bench(fn, repeat) for name, repeat, fn in items}


def run_inner():
    results = workloads()
    from stochplan.kernels import BACKEND
    print(json.dumps({"backend": BACKEND, "seconds": results}))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--inner", action="store_true",
                        help="run the workloads for the current backend only")
    args = parser.parse_args()
    if args.inner:
        run_inner()
        return

    per_backend = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, STOCHPLAN_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--inner"],
            env=env, capture_output=True, text=True, check=True)
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        per_backend[backend] = payload["seconds"]

    names = list(per_backend["numba"])
    print(f"{'workload':<20} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    for name in names:
        a = per_backend["numba"][name]
        b = per_backend["numpy"][name]
        print(f"{name:<20} {a * 1e6:>10.1f}us {b * 1e6:>10.1f}us {b / a:>8.1f}x")


if __name__ == "__main__":
    main()
