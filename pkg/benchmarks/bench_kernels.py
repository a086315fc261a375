"""Compare the compiled and pure-Python optimizer kernels.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from hqis import _kernels_py, access_audit, kernels

try:
    from hqis import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def audit_with(backend, n_secrets):
    saved = kernels.objective, kernels.coordinate_search
    kernels.objective, kernels.coordinate_search = backend.objective, backend.coordinate_search
    try:
        return access_audit.hierarchy_report(n_secrets, 0)
    finally:
        kernels.objective, kernels.coordinate_search = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--secrets", type=int, default=128)
    args = parser.parse_args(argv)

    if _kernels_c is None:
        print("compiled extension not built; only the pure-Python backend is available")
        return 1

    rng = np.random.default_rng(0)
    t = rng.normal(size=(2, 2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2, 2))
    angles = (0.3, -1.1, 2.0)

    cases = {
        "objective x10000": lambda b: (lambda: [b.objective(t, *angles) for _ in range(10000)]),
        "coordinate_search": lambda b: (lambda: b.coordinate_search(t, (0.1, 0.2, 0.3), np.pi / 8, 1e-6, 2000)),
        f"hierarchy_report({args.secrets})": lambda b: (lambda: audit_with(b, args.secrets)),
    }
    print(f"{'case':<26}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for name, make in cases.items():
        tc = best_of(make(_kernels_c), args.repeat)
        tp = best_of(make(_kernels_py), args.repeat)
        print(f"{name:<26}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")

    same = [r.best_avg_fidelity for r in audit_with(_kernels_c, 32)] == [
        r.best_avg_fidelity for r in audit_with(_kernels_py, 32)
    ]
    print(f"backends agree on hierarchy values: {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
