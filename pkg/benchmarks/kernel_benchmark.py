#!/usr/bin/env python3
"""Compare the native kernel extension against the pure-Python fallback.

Times each kernel on representative shapes and then a composite end-to-end
decode round at Monte Carlo scale, printing the per-backend timings and the
native speedup.  Run:

    python benchmarks/kernel_benchmark.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from edgespec import kernels
from edgespec.models import ModelPair
from edgespec.prob import TopK
from edgespec.rng import Stream, derive
from edgespec.single import draft_sequence, verify_sequence


def _bench(fn, reps: int) -> float:
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(reps):
            fn()
        best = min(best, (time.perf_counter() - t0) / reps)
    return best


def _kernel_cases(vocab: int):
    stream = Stream(derive(7, "bench", vocab))
    a = np.array([stream.uniform() for _ in range(vocab)])
    a /= a.sum()
    b = np.array([stream.uniform() for _ in range(vocab)])
    b /= b.sum()
    out = np.empty(vocab)
    sorted_desc = np.sort(a)[::-1].copy()
    return {
        f"seq_sum(V={vocab})": lambda: kernels.seq_sum(a),
        f"tv_distance(V={vocab})": lambda: kernels.tv_distance(a, b),
        f"overlap_mass(V={vocab})": lambda: kernels.overlap_mass(a, b),
        f"residual_into(V={vocab})": lambda: kernels.residual_into(a, b, out),
        f"inverse_cdf(V={vocab})": lambda: kernels.inverse_cdf(a, 0.997),
        f"nucleus_cutoff(V={vocab})": lambda: kernels.nucleus_cutoff(sorted_desc, 0.9, False),
        f"peaked_weights(V={vocab})": lambda: kernels.peaked_weights_into(12345, 200.0, out),
    }


def _round_case(vocab: int):
    pair = ModelPair(vocab, 2, 0.3, 40.0, seed=5)
    trunc = TopK(max(1, vocab // 100))
    counter = iter(range(10**9))

    def one_round():
        seed = derive(11, "bench-round", next(counter))
        batch = draft_sequence(pair, (1, 2), 4, trunc, round_seed=seed)
        verify_sequence(pair, (1, 2), batch, round_seed=seed)

    return one_round


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repetitions")
    args = parser.parse_args()

    if "native" not in kernels.available_backends():
        print("native extension not built; nothing to compare")
        return 1

    reps_small = 2000 if args.quick else 20000
    reps_big = 200 if args.quick else 2000

    rows = []
    for vocab, reps in ((8, reps_small), (512, reps_small), (32000, reps_big)):
        for name, fn in _kernel_cases(vocab).items():
            timings = {}
            for backend in ("pure", "native"):
                kernels.set_backend(backend)
                timings[backend] = _bench(fn, reps)
            rows.append((name, timings["pure"], timings["native"]))

    reps_round = 300 if args.quick else 3000
    for vocab in (8, 512):
        fn = _round_case(vocab)
        timings = {}
        for backend in ("pure", "native"):
            kernels.set_backend(backend)
            timings[backend] = _bench(fn, reps_round)
        rows.append((f"decode round (V={vocab}, L=4)", timings["pure"], timings["native"]))

    kernels.set_backend("native")

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'pure':>12}  {'native':>12}  {'speedup':>8}")
    for name, pure_t, native_t in rows:
        print(
            f"{name:<{width}}  {pure_t * 1e6:>10.2f}us  {native_t * 1e6:>10.2f}us"
            f"  {pure_t / native_t:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
