"""Compare the compiled kernels with the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is timed on the
same random inputs for both backends, and the results are checked to agree.
"""
import argparse
import timeit

import numpy as np

from vvlab import kernels


def make_inputs(M, n, rng):
    x = np.sort(rng.uniform(-10.0, 10.0, M))
    z1 = np.abs(rng.normal(size=M))
    z2 = np.abs(rng.normal(size=M))
    ue = rng.normal(size=(M + 4, n))
    fe = rng.normal(size=(M + 4, n))
    a = rng.normal(size=(M, n, n))
    bmid = rng.normal(size=(M + 1, n, n))
    return x, z1, z2, ue, fe, a, bmid


def cases(inputs):
    x, z1, z2, ue, fe, a, bmid = inputs
    return {
        "q_sum": lambda mod: mod.q_sum(x, z1, z2, 1.5, 2.0),
        "area_sum": lambda mod: mod.area_sum(z1, z2),
        "stencil_rhs": lambda mod: mod.stencil_rhs(ue, a, bmid, fe, 0.01, 1.0, False),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 2048])
    parser.add_argument("--n", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension unavailable; timing the numpy backend only")
    print(f"{'kernel':<12} {'M':>6} " + " ".join(f"{name:>12}" for name in kernels.BACKENDS) + "   speedup")
    for M in args.sizes:
        for name, call in cases(make_inputs(M, args.n, rng)).items():
            timings, results = {}, {}
            for backend, module in kernels.BACKENDS.items():
                results[backend] = np.asarray(call(module))
                timer = timeit.Timer(lambda: call(module))
                number, _ = timer.autorange()
                timings[backend] = min(timer.repeat(args.repeat, number)) / number
            if len(results) == 2:
                ref, fast = results["numpy"], results["compiled"]
                scale = max(1.0, float(np.max(np.abs(ref))))
                assert np.max(np.abs(ref - fast)) <= 1e-12 * scale, f"{name} backends disagree"
                speedup = f"{timings['numpy'] / timings['compiled']:8.1f}x"
            else:
                speedup = "       -"
            cols = " ".join(f"{timings[b] * 1e3:10.3f}ms" for b in kernels.BACKENDS)
            print(f"{name:<12} {M:>6} {cols}   {speedup}")


if __name__ == "__main__":
    main()
