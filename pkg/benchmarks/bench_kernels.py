"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times each kernel under both backends on FEMNIST-CNN-sized inputs, then a
full training step, and checks the two backends give identical results.
"""

import argparse
import timeit

import numpy as np

from orderdrop import kernels
from orderdrop.experiments.tasks import femnist_cnn_arch
from orderdrop.nn import Network, backward
from orderdrop.od import make_uniform_k


def cases(rng):
    x = rng.standard_normal((32, 10, 28, 28))
    cols = kernels.im2col(x, 5, 5)
    pooled, arg = kernels.maxpool_forward(x, 2)
    dout = rng.standard_normal(pooled.shape)
    net = Network(femnist_cnn_arch(10), make_uniform_k(5).values, seed=0)
    images, labels = rng.standard_normal((32, 1, 28, 28)), rng.integers(0, 10, 32)
    return {
        "im2col": lambda: kernels.im2col(x, 5, 5),
        "col2im": lambda: kernels.col2im(cols, x.shape, 5, 5),
        "maxpool_forward": lambda: kernels.maxpool_forward(x, 2),
        "maxpool_backward": lambda: kernels.maxpool_backward(dout, arg, 2, x.shape),
        "train_step_p1.0": lambda: backward(net, images, labels, 1.0),
        "train_step_p0.2": lambda: backward(net, images, labels, 0.2),
    }


def outputs_match(rng):
    x = rng.standard_normal((4, 3, 12, 12))
    got = {}
    for name in ("python", "cython"):
        kernels.use_backend(name)
        cols = kernels.im2col(x, 3, 3)
        got[name] = (cols, kernels.col2im(cols, x.shape, 3, 3), *kernels.maxpool_forward(x, 2))
    return all(np.array_equal(a, b) for a, b in zip(got["python"], got["cython"]))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    timings = {}
    for backend in ("python", "cython"):
        kernels.use_backend(backend)
        for name, fn in cases(rng).items():
            fn()  # warm up
            timings.setdefault(name, {})[backend] = min(timeit.repeat(fn, number=3, repeat=args.repeat)) / 3
    print(f"{'kernel':<20}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, t in timings.items():
        print(f"{name:<20}{t['python'] * 1e3:>12.3f}{t['cython'] * 1e3:>12.3f}{t['python'] / t['cython']:>9.2f}x")
    print("backends agree:", outputs_match(rng))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
