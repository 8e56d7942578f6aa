"""Compare the numba and numpy trial kernels.

    python benchmarks/bench_kernels.py --trials 1000000 --repeat 5
"""
import argparse
import math
import timeit

import numpy as np

from qdanalyzer import _kernels
from qdanalyzer.sources import SourceConfig, raw_words


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    key = SourceConfig(seed=1).key()
    gen = min(timeit.repeat(lambda: raw_words(key, 0, args.trials), number=1, repeat=args.repeat))
    words = raw_words(key, 0, args.trials)
    w = np.arccos(np.linspace(-1, 1, args.trials, endpoint=False) + 1.0 / args.trials)

    cases = {
        "pair_counts/deterministic": ("pair_counts", (words, 0, 0.03, 0.7, 0)),
        "pair_counts/probabilistic": ("pair_counts", (words, 2, 0.0, 0.7, 1)),
        "malus_counts": ("malus_counts", (words, 1, math.radians(60))),
        "ineq5_tallies": ("ineq5_tallies", (words, 2, 0.0, np.array([-0.78, -2.3, 0.78, -0.78]), True)),
        "census_sign_sum": ("census_sign_sum", (w, 0.9)),
    }
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    print(f"{args.trials} trials, best of {args.repeat}; Philox word generation {gen * 1e3:.1f} ms")
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for label, (name, kargs) in cases.items():
        times = []
        for backend in backends:
            fn = _kernels.get(name, backend)
            fn(*kargs)  # compile / warm caches
            times.append(min(timeit.repeat(lambda: fn(*kargs), number=1, repeat=args.repeat)))
        speed = f"{times[0] / times[-1]:10.2f}x" if len(times) > 1 else ""
        print(f"{label:<28}" + "".join(f"{t * 1e3:10.1f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
