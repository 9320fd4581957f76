"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 4096]

Both paths are imported from the same module, so the comparison holds
regardless of ``BRWSPEED_DISABLE_JIT``; with the flag set (or numba missing)
only the numpy column is reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from brwspeed import _kernels


def cases(size: int, rng: np.random.Generator):
    x = np.unique(rng.uniform(-5, 5, size))
    y = x**2 + rng.normal(0, 0.5, x.size)
    mats = rng.uniform(0.1, 2.0, (size // 8, 4, 4))
    return {
        "lower_hull": (x, y),
        "log_pf_batch": (mats, 1e-13, 10_000),
    }


def agree(name: str, a, b) -> bool:
    if name == "log_pf_batch":
        return bool(np.allclose(a, b, rtol=1e-11, atol=1e-12))
    return bool(np.array_equal(a, b))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--size", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    jit = _kernels.JIT_KERNELS
    print(f"jit available: {bool(jit)}  size: {args.size}  repeat: {args.repeat}")
    print(f"{'kernel':<16}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  agree")
    for name, call_args in cases(args.size, rng).items():
        py = _kernels.PY_KERNELS[name]
        t_py = min(timeit.repeat(lambda: py(*call_args), number=1, repeat=args.repeat)) * 1e3
        if name in jit:
            fast = jit[name]
            same = agree(name, py(*call_args), fast(*call_args))  # also warms the compiled path
            t_jit = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<16}{t_py:>12.3f}{t_jit:>12.3f}{t_py / t_jit:>9.1f}x  {same}")
        else:
            print(f"{name:<16}{t_py:>12.3f}{'-':>12}{'-':>10}  -")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
