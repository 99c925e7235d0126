"""Time the Cython kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from prcs_tomo import _pykernels

try:
    from prcs_tomo import _ckernels
except ImportError:
    _ckernels = None


def cases():
    x = np.linspace(-6.0, 6.0, 1201)
    r = np.linspace(0.0, 40.0, 4001)
    coeffs = np.exp(-2.2) * np.cumprod(np.r_[1.0, 2.2 / np.arange(1, 31)])
    return {
        "i0e (4001 pts)": lambda k: k.i0e(r),
        "fock_density_table (k<=30, 1201 pts)": lambda k: k.fock_density_table(x, 30),
        "fock_mixture (k<=30, 1201 pts)": lambda k: k.fock_mixture(x, coeffs),
        "fit-like loop (60 mixtures, 201 bins x4 nodes)": lambda k: fit_loop(k),
    }


def fit_loop(k):
    x = np.linspace(-3.0, 3.0, 804)
    for mu in np.linspace(0.1, 2.5, 60):
        c = np.exp(-mu) * np.cumprod(np.r_[1.0, mu / np.arange(1, 26)])
        k.fock_mixture(x, c)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    print(f"{'kernel':48s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases().items():
        times = {}
        for b, mod in backends.items():
            n = 20
            times[b] = min(timeit.repeat(lambda: fn(mod), number=n, repeat=args.repeat)) / n
        line = f"{name:48s}" + "".join(f"{times[b] * 1e3:10.3f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{times['python'] / times['cython']:11.1f}x"
        print(line)
    if _ckernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
