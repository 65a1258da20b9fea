"""Compare the two convolution kernel paths on the training workload shapes.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times forward, input-gradient, and weight-gradient passes for every conv
layer shape the 128x128 network hits with a 10-image batch, on the BLAS
numpy path and the numba loop path, and reports a full training-step
estimate for each.  The active default path is whatever MRIQ_KERNELS
selects at import (numpy unless overridden).
"""

import argparse
import time

import numpy as np

from mriq.net import kernels

# (batch, in_ch, H, W, out_ch, kernel, stride, pad) per layer
LAYER_SHAPES = [
    (10, 1, 128, 128, 16, 5, 2, 2),
    (10, 16, 64, 64, 32, 3, 2, 1),
    (10, 32, 32, 32, 64, 3, 2, 1),
    (10, 64, 16, 16, 64, 3, 2, 1),
]


def run_path(use_numba: bool, repeats: int) -> dict:
    kernels.USE_NUMBA = use_numba
    rng = np.random.default_rng(0)
    rows = []
    for (n, cin, h, w, cout, k, stride, pad) in LAYER_SHAPES:
        x = rng.normal(size=(n, cin, h, w)).astype(np.float32)
        wt = rng.normal(size=(cout, cin, k, k)).astype(np.float32)
        b = rng.normal(size=cout).astype(np.float32)
        out = kernels.conv2d_forward(x, wt, b, stride, pad)
        dout = rng.normal(size=out.shape).astype(np.float32)

        def timeit(fn):
            fn()  # warm (JIT-compiles on the numba path)
            t0 = time.perf_counter()
            for _ in range(repeats):
                fn()
            return (time.perf_counter() - t0) / repeats * 1e3

        rows.append({
            "shape": f"{cin:>3}ch {h:>3}px -> {cout}ch",
            "fwd": timeit(lambda: kernels.conv2d_forward(x, wt, b, stride, pad)),
            "dx": timeit(lambda: kernels.conv2d_backward_input(dout, wt, stride, pad, (h, w))),
            "dw": timeit(lambda: kernels.conv2d_backward_weights(dout, x, k, k, stride, pad)),
        })
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()

    results = {}
    for name, flag in (("numpy", False), ("numba", True)):
        print(f"\n== {name} path ==")
        print(f"{'layer':<22}{'fwd ms':>9}{'dx ms':>9}{'dw ms':>9}")
        rows = run_path(flag, args.repeats)
        for r in rows:
            print(f"{r['shape']:<22}{r['fwd']:>9.2f}{r['dx']:>9.2f}{r['dw']:>9.2f}")
        total = sum(r["fwd"] + r["dx"] + r["dw"] for r in rows)
        results[name] = total
        print(f"{'conv total per training step':<34}{total:>9.1f} ms")

    faster = min(results, key=results.get)
    ratio = max(results.values()) / min(results.values())
    print(f"\n{faster} path is {ratio:.1f}x faster on this machine "
          f"(select with MRIQ_KERNELS={faster})")


if __name__ == "__main__":
    main()
