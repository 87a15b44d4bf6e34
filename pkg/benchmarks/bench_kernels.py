"""Compare the compiled kernels with their pure-Python twins.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

import argparse
import timeit
from math import pi

import numpy as np

from phdae import IntegratorConfig, ZeroSource, _backend, _kernels_py, simulate
from phdae.pendulum import PendulumParams, build_implicit, pendulum_method, swinging_state

try:
    from phdae import _kernels as _compiled
except ImportError:
    _compiled = None

PARAMS = PendulumParams()
PT = PARAMS.as_tuple()


def bench_step(impl, number):
    x = swinging_state(PARAMS)
    u = np.array([0.1, 0.0])
    nu = np.array([6.0, 9.0])
    return timeit.timeit(lambda: impl.pendulum_step(PT, x.r, x.p, u, 0.01, nu, 1e-12, 50, 1e-7),
                         number=number) / number


def bench_rk4(impl, steps):
    out = np.empty((steps + 1, 4))
    x0 = (-pi / 2 + 0.5, 0.3, 0.0, 0.0)
    return min(timeit.repeat(lambda: impl.rk4_run(PT, x0, (0.0, 0.0), 1e-5, steps, out),
                             number=1, repeat=3))


def bench_simulate(impl, steps):
    sys = build_implicit(PARAMS)
    method = pendulum_method(PARAMS)
    x0 = swinging_state(PARAMS)
    saved = _backend.pendulum_step
    _backend.pendulum_step = impl.pendulum_step
    try:
        return min(timeit.repeat(
            lambda: simulate(sys, method, x0, ZeroSource(2), IntegratorConfig(h=0.01), steps),
            number=1, repeat=3))
    finally:
        _backend.pendulum_step = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=2000, help="calls per single-step timing")
    args = parser.parse_args(argv)

    impls = [("python", _kernels_py)]
    if _compiled is not None:
        impls.append(("cython", _compiled))
    else:
        print("compiled extension not built; timing the Python fallback only")

    cases = [
        ("pendulum_step (one call)", lambda impl: bench_step(impl, args.repeat)),
        ("rk4_run (1e5 steps)", lambda impl: bench_rk4(impl, 100_000)),
        ("simulate (2000 steps)", lambda impl: bench_simulate(impl, 2000)),
    ]
    print(f"{'case':<28}" + "".join(f"{name:>14}" for name, _ in impls) + f"{'speedup':>10}")
    for label, fn in cases:
        times = [fn(impl) for _, impl in impls]
        row = f"{label:<28}" + "".join(f"{t * 1e6:>11.1f} us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
