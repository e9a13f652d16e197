"""Compare the compiled and pure-numpy convolution backends.

Runs the three hot kernels (forward correlation, input backward, weight
backward) at a few training-relevant shapes and reports per-call wall time
for each backend, plus the max absolute disagreement.

Usage: python3 benchmarks/bench_conv.py [--repeats N]
"""

import argparse
import importlib
import time

import numpy as np

CASES = [
    # (batch, cin, cout, size, kernel, stride)
    ("generator encoder", 1, 64, 128, 64, 3, 2),
    ("residual block", 1, 256, 32, 256, 3, 1),
    ("discriminator", 2, 64, 64, 64, 4, 2),
    ("demo scale", 8, 8, 32, 8, 3, 1),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    py = importlib.import_module("blurlab._convcore_py")
    try:
        cy = importlib.import_module("blurlab._convcore")
    except ImportError:
        print("compiled backend not built; run pip install -e . first")
        return 1

    gen = np.random.default_rng(0)
    header = f"{'case':<20} {'op':<16} {'numpy (ms)':>11} {'compiled (ms)':>14} {'speedup':>8} {'max |diff|':>11}"
    print(header)
    print("-" * len(header))
    for name, b, cin, h, cout, k, stride in CASES:
        x = np.ascontiguousarray(gen.normal(size=(b, cin, h, h)))
        w = np.ascontiguousarray(gen.normal(size=(cout, cin, k, k)))
        y = py.corr_forward(x, w, stride)
        gy = np.ascontiguousarray(gen.normal(size=y.shape))
        ops = [
            ("corr_forward", lambda m: m.corr_forward(x, w, stride)),
            ("backward_input",
             lambda m: m.corr_backward_input(gy, w, stride, h, h)),
            ("backward_weight",
             lambda m: m.corr_backward_weight(x, gy, stride, k, k)),
        ]
        for op_name, op in ops:
            t_py = _time(lambda: op(py), args.repeats)
            t_cy = _time(lambda: op(cy), args.repeats)
            diff = float(np.abs(op(py) - op(cy)).max())
            print(f"{name:<20} {op_name:<16} {t_py * 1e3:>11.2f} "
                  f"{t_cy * 1e3:>14.2f} {t_py / t_cy:>7.2f}x {diff:>11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
