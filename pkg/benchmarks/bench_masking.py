"""Benchmark the weighted-sampling kernel: numba @njit vs pure numpy.

The kernel is the hot loop of batch masking: one call per sequence per
step, each drawing count positions without replacement. Run:

    python benchmarks/bench_masking.py

Set TVMASK_NUMBA=0 to confirm the numpy fallback is what a numba-less
install would use.
"""

import time

import numpy as np

from tvmask.masking import kernels


def bench(backend_name, use_numba, cases, repeats=5):
    # one warm call so jit compilation is not billed to the timing
    w, c, u = cases[0]
    kernels.sample_proportional(w, c, u, use_numba=use_numba)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for w, c, u in cases:
            kernels.sample_proportional(w, c, u, use_numba=use_numba)
        best = min(best, time.perf_counter() - t0)
    per_call = best / len(cases)
    print(f"{backend_name:>8}: {best:7.3f} s total, {per_call * 1e6:8.1f} us/sequence")
    return best


def main():
    rng = np.random.default_rng(0)
    n_sequences = 20_000
    L = 128
    ratio = 0.30
    cases = []
    for _ in range(n_sequences):
        weights = rng.uniform(0.2, 0.8, size=L)
        weights[:1] = 0.0
        weights[-2:] = 0.0  # special positions
        count = int(ratio * (L - 3))
        cases.append((weights, count, rng.random(count)))

    print(f"{n_sequences} sequences of length {L}, {cases[0][1]} draws each")
    t_np = bench("numpy", False, cases)
    if kernels.HAS_NUMBA:
        t_nb = bench("numba", True, cases)
        print(f"speedup: {t_np / t_nb:.1f}x")
        # backends must agree bit for bit
        for w, c, u in cases[:200]:
            a = kernels.sample_proportional(w, c, u, use_numba=False)
            b = kernels.sample_proportional(w, c, u, use_numba=True)
            assert np.array_equal(a, b)
        print("bit-identical outputs on 200 spot checks")
    else:
        print("numba not installed; numpy fallback is the only backend")


if __name__ == "__main__":
    main()
