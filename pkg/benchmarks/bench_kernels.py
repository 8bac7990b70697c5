"""Time the compiled kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from qlangevin import _pykernels

try:
    from qlangevin import _ckernels
except ImportError:
    _ckernels = None


def _inputs(rng):
    n = 4001
    k = np.linspace(0.0, 40.0, n)
    g = np.exp(-k) * np.sin(k)
    weights = np.full(n, k[1])
    targets = np.arange(1, n - 1, 4, dtype=np.int64)
    gprime = np.gradient(g, k)[targets]
    p = (0.1 + rng.random(400)) + 1j * rng.random(400)
    half = 1500
    w = np.arange(-half, half + 1) * 0.01
    r = -1j / (w + 1j)
    s = 1 + r
    sigma = np.tanh(w / 0.4)
    return {
        "pv_fold_sum": (g, k, weights, gprime, targets, 1.0),
        "measure_integral": (k, g, p),
        "grid_xi_sum": (sigma, r, s, 500, 500, 0.01),
        "grid_cff_sum": (np.abs(sigma), r, s, 500, 500, 0.01),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = _inputs(np.random.default_rng(0))
    print(f"{'kernel':<18}{'numpy s':>12}{'cython s':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, call_args in cases.items():
        py = getattr(_pykernels, name)
        t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:<18}{t_py:12.4f}{'n/a':>12}")
            continue
        cy = getattr(_ckernels, name)
        t_cy = min(timeit.repeat(lambda: cy(*call_args), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(py(*call_args)) - np.asarray(cy(*call_args)))))
        print(f"{name:<18}{t_py:12.4f}{t_cy:12.4f}{t_py / t_cy:10.1f}{diff:14.2e}")


if __name__ == "__main__":
    main()
