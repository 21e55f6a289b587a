"""Benchmark the compiled Jacobi kernels against the NumPy/LAPACK fallback.

Micro-benchmarks time the two implementations in-process on the matrix
shapes the feasibility solvers actually produce; the end-to-end section
reruns a representative bisection in subprocesses with the backend forced
through QINCOMPAT_PURE_PYTHON.

Run:  python benchmarks/bench_backend.py
"""

from __future__ import annotations

import os
import subprocess
import sys
import time

import numpy as np

from qincompat import _backend_numpy

try:
    from qincompat import _jacobi
except ImportError:
    _jacobi = None


def rand_hermitian_batch(m, n, rng):
    x = rng.normal(size=(m, n, n)) + 1j * rng.normal(size=(m, n, n))
    return 0.5 * (x + x.conj().swapaxes(1, 2))


def time_call(fn, *args, repeats=7, inner=20):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def micro():
    rng = np.random.default_rng(0)
    cases = [
        ("psd_clip_batch  4 x  2x2 (jm grid, d=2)", "psd_clip_batch", rand_hermitian_batch(4, 2, rng)),
        ("psd_clip_batch 16 x  4x4 (jm grid, d=4)", "psd_clip_batch", rand_hermitian_batch(16, 4, rng)),
        ("psd_clip_batch  5 x 25x25 (instrument, d=5)", "psd_clip_batch", rand_hermitian_batch(5, 25, rng)),
        ("psd_clip        8x8   (joint channel, d=2)", "psd_clip", rand_hermitian_batch(1, 8, rng)[0]),
        ("psd_clip       27x27  (joint channel, d=3)", "psd_clip", rand_hermitian_batch(1, 27, rng)[0]),
        ("psd_clip       64x64  (joint channel, d=4)", "psd_clip", rand_hermitian_batch(1, 64, rng)[0]),
        ("eigh            8x8", "eigh", rand_hermitian_batch(1, 8, rng)[0]),
        ("eigh           27x27", "eigh", rand_hermitian_batch(1, 27, rng)[0]),
    ]
    print(f"{'kernel case':<46}{'numpy':>12}{'jacobi':>12}{'speedup':>10}")
    print("-" * 80)
    for label, fname, arg in cases:
        t_np = time_call(getattr(_backend_numpy, fname), arg)
        if _jacobi is None:
            print(f"{label:<46}{t_np * 1e6:>10.1f}us{'n/a':>12}{'':>10}")
            continue
        t_jc = time_call(getattr(_jacobi, fname), arg)
        print(f"{label:<46}{t_np * 1e6:>10.1f}us{t_jc * 1e6:>10.1f}us{t_np / t_jc:>9.2f}x")


END_TO_END = r"""
import time
import numpy as np
from qincompat import backend
from qincompat.compat import jm_feasible, SolverConfig
from qincompat.covariance import sharp_weyl_pair
from qincompat.devices import mix
from qincompat.theorems import weyl_optimal_noise

d = 3
q, p = sharp_weyl_pair(d)
noise = weyl_optimal_noise(d)
t0 = time.perf_counter()
for t in np.linspace(0.70, 0.85, 16):
    jm_feasible(*mix((q, p), noise, float(t)))
print(f"{backend.BACKEND:>8}: {time.perf_counter() - t0:.2f} s for 16 joint-measurability solves (d=3)")
"""


def end_to_end():
    for force in ("0", "1"):
        env = dict(os.environ, QINCOMPAT_PURE_PYTHON=force)
        subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True)


if __name__ == "__main__":
    print(f"compiled extension available: {_jacobi is not None}\n")
    micro()
    print("\nend-to-end (backend forced via QINCOMPAT_PURE_PYTHON):")
    end_to_end()
