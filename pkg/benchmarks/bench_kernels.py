"""Compare the compiled kernels with the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Both backends are timed
on identical inputs and their outputs are compared.
"""

import argparse
import time

import numpy as np

from levelque.kernels import backends


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    xs = np.linspace(0.5, 60.0, 2000)
    return {
        "besselk_array(i*10, 2000 pts)": lambda m: m.besselk_array(0.0, 10.0, xs),
        "besselk_array(i*40, 2000 pts)": lambda m: m.besselk_array(0.0, 40.0, xs),
        "besselk scalar x200": lambda m: [m.besselk(0.0, 5.0, float(x)) for x in xs[::10]],
        "coset_row_sum(c=11, |d|<=3000)": lambda m: m.coset_row_sum(11, 0.1, 0.9, 2.0, 0.0, -3000, 3000),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    mods = backends()
    if "compiled" not in mods:
        print("compiled extension not built; only the python backend is available")
    print(f"{'case':36s} " + " ".join(f"{name:>12s}" for name in mods) + "   speedup  max|diff|")
    for label, fn in cases().items():
        times, outs = {}, {}
        for name, mod in mods.items():
            times[name], outs[name] = _best_of(lambda: fn(mod), args.repeat)
        row = f"{label:36s} " + " ".join(f"{times[n] * 1e3:10.2f}ms" for n in mods)
        if "compiled" in mods:
            a = np.asarray(outs["python"], dtype=complex)
            b = np.asarray(outs["compiled"], dtype=complex)
            diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
            row += f"  {times['python'] / times['compiled']:7.1f}x  {diff:9.2e}"
        print(row)


if __name__ == "__main__":
    main()
