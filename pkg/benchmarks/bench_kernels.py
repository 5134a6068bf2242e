"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from uavtrack import _core_py, kernels
from uavtrack.synth import ScenarioConfig, generate
from uavtrack.tracker import Tracker, run_sequence


def best_of(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    try:
        from uavtrack import _core
    except ImportError:
        print("compiled core not built; only the fallback is available")
        _core = None

    rng = np.random.default_rng(0)
    rows = []
    for n in (5, 20, 100):
        a = np.ascontiguousarray(rng.uniform(0, 100, (n, 4)))
        b = np.ascontiguousarray(rng.uniform(0, 100, (n, 4)))
        c = np.ascontiguousarray(rng.random((n, n)))
        for name, args_ in (("iou_matrix", (a, b)), ("lsa_potentials", (c,))):
            py = best_of(lambda: getattr(_core_py, name)(*args_), args.repeat)
            cy = best_of(lambda: getattr(_core, name)(*args_), args.repeat) if _core else float("nan")
            rows.append((f"{name} {n}x{n}", py, cy))

    bundle = generate(ScenarioConfig(n_objects=10, n_frames=200, seed=1, pos_jitter=0.3, fp_rate=0.5, embedding_dim=0))
    impl = kernels._impl
    timings = {}
    for label, mod in (("python", _core_py), ("cython", _core)):
        if mod is None:
            timings[label] = float("nan")
            continue
        kernels._impl = mod
        timings[label] = best_of(lambda: run_sequence(Tracker(), bundle.detections, bundle.n_frames), 3)
    kernels._impl = impl
    rows.append(("tracker 10 obj x 200 frames", timings["python"], timings["cython"]))

    print(f"{'case':<30}{'python (s)':>14}{'cython (s)':>14}{'speedup':>10}")
    for name, py, cy in rows:
        print(f"{name:<30}{py:>14.3e}{cy:>14.3e}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
