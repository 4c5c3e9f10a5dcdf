"""Time one SGD epoch under each available kernel backend.

    python benchmarks/bench_kernels.py [--repeat 5]

Shapes cover the desk-scale network sweeps (n=450 fit rows after the
validation carve, batch 32) from tiny widths up to MNIST-sized inputs.
Both backends start from identical weights; the script also reports the
largest weight difference after the epoch as a sanity check.
"""

import argparse
import timeit

import numpy as np

from descentlab import _kernels

SHAPES = [  # (n, P, h, K)
    (450, 20, 4, 2),
    (450, 200, 20, 2),
    (450, 200, 60, 2),
    (900, 784, 60, 10),
]


def problem(n, P, h, K, seed=0):
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal(s) * 0.1 for s in ((h, P), (h,), (K, h), (K,))]
    X = rng.uniform(size=(n, P))
    Z = np.eye(K)[rng.integers(0, K, n)]
    order = rng.permutation(n).astype(np.int64)
    return weights, X, Z, order


def time_backend(name, shape, repeat, batch=32, lr=0.01):
    kernel = _kernels.get_backend(name).sgd_epoch
    weights, X, Z, order = problem(*shape)
    work = [w.copy() for w in weights]

    def once():
        for w, w0 in zip(work, weights):
            w[...] = w0
        kernel(*work, X, Z, order, batch, lr)

    best = min(timeit.repeat(once, number=1, repeat=repeat))
    once()
    return best, [w.copy() for w in work]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = _kernels.available_backends()
    print(f"default backend: {_kernels.BACKEND}; available: {', '.join(names)}")
    print(f"{'n':>5} {'P':>4} {'h':>3} {'K':>3}  " + "  ".join(f"{n:>10}" for n in names) + "  speedup  max|dW|")
    for shape in SHAPES:
        results = {name: time_backend(name, shape, args.repeat) for name in names}
        cells = "  ".join(f"{results[n][0] * 1e3:>8.2f}ms" for n in names)
        if len(names) == 2:
            speed = results["python"][0] / results["cython"][0]
            diff = max(float(np.max(np.abs(a - b))) for a, b in zip(results["python"][1], results["cython"][1]))
            tail = f"  {speed:>6.1f}x  {diff:.1e}"
        else:
            tail = "  (extension not built)"
        print(f"{shape[0]:>5} {shape[1]:>4} {shape[2]:>3} {shape[3]:>3}  {cells}{tail}")


if __name__ == "__main__":
    main()
