"""Compare the compiled and pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat N]

Workloads: the baseline rate-equation run from cold start to steady state,
and the baseline echo recursion over ten round trips.
"""

import argparse
import time

import numpy as np

from rbcom import kernels
from rbcom.config import SystemConfig, validate
from rbcom.echo import EchoChannelConfig, simulate_echo
from rbcom.gain import GainState, integrate_to_steady, rate_params_from_config


def _best_of(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def rate_workload(backend):
    params = rate_params_from_config(validate(SystemConfig()))
    return lambda: integrate_to_steady(GainState(0.0, 0.0), params, backend=backend)


def echo_workload(backend):
    vcfg = validate(SystemConfig())
    dt = 1.0 / 160e9
    cfg = EchoChannelConfig(vcfg.tau_p, vcfg.tau_a, dt, eta_d=vcfg.eta_d)
    n = cfg.n_samples
    x = 0.9 + 0.1 * np.sign(np.sin(np.arange(n) * 0.013))
    g = 1.0 / (0.9 * vcfg.eta_d)
    return lambda: simulate_echo(x, g, cfg, backend=backend)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = [b for b in ("python", "cython") if b in kernels.BACKENDS]
    if "cython" not in backends:
        print("compiled kernels unavailable; timing the Python fallback only")

    print(f"{'workload':<12} {'backend':<8} {'seconds':>10} {'detail'}")
    timings = {}
    for name, make in (("rate", rate_workload), ("echo", echo_workload)):
        for backend in backends:
            secs, result = _best_of(make(backend), args.repeat)
            timings[name, backend] = secs
            if name == "rate":
                detail = f"{result.accepted_steps} steps, converged={result.converged}"
            else:
                detail = f"{result.ye_samples.size} samples"
            print(f"{name:<12} {backend:<8} {secs:>10.4f} {detail}")
    if len(backends) == 2:
        for name in ("rate", "echo"):
            print(f"{name} speed-up: {timings[name, 'python'] / timings[name, 'cython']:.1f}x")


if __name__ == "__main__":
    main()
