"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from cqnls import _pykernels, kernels
from cqnls.ground_state import ShootingConfig, equilibrium, solve_ground_state

try:
    from cqnls import _kernels
except ImportError:
    _kernels = None


def shoot_case(mod):
    cfg = ShootingConfig()
    w = 3 / 32
    q, dq = np.zeros(8000), np.zeros(8000)
    return lambda: mod.shoot(w, equilibrium(w), 0.0321461781507, cfg.r0, 200.0, cfg.rtol,
                             cfg.atol, cfg.overshoot_threshold, 0.02, q, dq)


def bisect_case(mod):
    n = 4000
    h = 0.02
    r = h * np.arange(1, n + 1)
    d = 2.0 / h ** 2 + 0.1 - 1.0 / np.cosh(r) ** 2
    e = np.full(n - 1, -1.0 / h ** 2)
    return lambda: mod.bisect_eigenvalues(d, e, 4, -5.0, 5.0, 1e-12)


def solve_case(mod):
    def run():
        saved = kernels.shoot
        kernels.shoot = mod.shoot
        try:
            solve_ground_state(3 / 32)
        finally:
            kernels.shoot = saved
    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [("python", _pykernels)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    print(f"{'case':<10}{'backend':<10}{'best [s]':>12}")
    for name, make in (("shoot", shoot_case), ("bisect", bisect_case), ("solve", solve_case)):
        times = {}
        for label, mod in backends:
            fn = make(mod)
            fn()
            times[label] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            print(f"{name:<10}{label:<10}{times[label]:>12.5f}")
        if len(times) == 2:
            print(f"{name:<10}{'speedup':<10}{times['python'] / times['cython']:>11.1f}x")


if __name__ == "__main__":
    main()
