"""Compare the compiled curvature kernel against the NumPy fallback.

Runs the Christoffel and Riemann batch kernels on a grid of round-sphere
metrics with both backends, reports timings, and checks that the outputs
agree to machine precision.

Usage: python benchmarks/bench_curvature.py [npoints]
"""

import subprocess
import sys
import time

import numpy as np


def _sample_inputs(npoints, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(npoints, dim, dim))
    g = np.einsum("pik,pjk->pij", A, A) + dim * np.eye(dim)
    ginv = np.linalg.inv(g)
    dg = rng.normal(size=(npoints, dim, dim, dim))
    dg = 0.5 * (dg + dg.transpose(0, 1, 3, 2))
    d2g = rng.normal(size=(npoints, dim, dim, dim, dim))
    d2g = 0.5 * (d2g + d2g.transpose(0, 2, 1, 3, 4))
    d2g = 0.5 * (d2g + d2g.transpose(0, 1, 2, 4, 3))
    return g, ginv, dg, d2g


def run(npoints, repeats=5):
    from renvol import backend

    g, ginv, dg, d2g = _sample_inputs(npoints)
    gamma = backend.christoffel_batch(ginv, dg)

    results = {}
    for name, fn, args in (
        ("christoffel", backend.christoffel_batch, (ginv, dg)),
        ("riemann", backend.riemann_batch, (g, dg, d2g, gamma)),
    ):
        fn(*args)  # warm up
        best = min(_timed(fn, args) for _ in range(repeats))
        results[name] = (best, fn(*args))
    return results


def _timed(fn, args):
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def main():
    npoints = int(sys.argv[1]) if len(sys.argv) > 1 else 4096
    import os

    if os.environ.get("_BENCH_CHILD"):
        res = run(npoints)
        for name, (t, out) in res.items():
            np.save(f"/tmp/bench_{name}.npy", out)
            print(f"{name} {t:.6f}")
        return

    from renvol.backend import BACKEND

    if BACKEND != "compiled":
        print("compiled kernel unavailable; nothing to compare")
        return

    res = run(npoints)
    print(f"n = {npoints} metric points, dim 4")
    print(f"{'kernel':<12} {'compiled':>10} {'python':>10} {'speedup':>8} {'max diff':>10}")

    env = dict(os.environ, RENVOL_BACKEND="python", _BENCH_CHILD="1")
    out = subprocess.run(
        [sys.executable, __file__, str(npoints)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    py_times = dict(line.split() for line in out.stdout.strip().splitlines())
    for name, (t, val) in res.items():
        t_py = float(py_times[name])
        ref = np.load(f"/tmp/bench_{name}.npy")
        diff = float(np.abs(val - ref).max())
        print(f"{name:<12} {t:>9.4f}s {t_py:>9.4f}s {t_py / t:>7.1f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
