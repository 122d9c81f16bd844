"""Compare the compiled and pure-Python RK4 plant kernels.

    python benchmarks/bench_plant.py [--steps N] [--repeat R]

Runs the CREATOR plant from a perturbed hover for ``N`` integration steps
with each available kernel and reports steps per second and the speed-up.
"""
import argparse
import time

import numpy as np

from cdpr_shaping import _kernels
from cdpr_shaping.config import load_robot
from cdpr_shaping.control_sim import FrictionParams, VirtualPlant
from cdpr_shaping.tension import static_tensions

P1 = np.array([0.29, -0.047, 0.62])


def time_kernel(kernel, steps, repeat):
    cfg = load_robot()
    plant = VirtualPlant(cfg.model, FrictionParams(), friction_smoothing=0.01, kernel=kernel)
    tau0 = static_tensions(cfg.model, P1).tensions
    plant.pretension(P1, tau0)
    torque = cfg.model.winding_ratios * tau0
    best = np.inf
    for _ in range(repeat):
        x = plant.initial_vector(P1, twist=[0.01, 0.0, 0.02])
        t0 = time.perf_counter()
        for _ in range(steps // 10):
            plant.advance(x, torque, 10, 1e-4)
        best = min(best, time.perf_counter() - t0)
    return best, x


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    kernels = ["python"] + (["compiled"] if _kernels.compiled_advance is not None else [])
    timings, states = {}, {}
    for k in kernels:
        timings[k], states[k] = time_kernel(k, args.steps, args.repeat)
        print(f"{k:>9}: {timings[k]:8.3f} s  ({args.steps / timings[k]:12.0f} steps/s)")
    if len(kernels) == 2:
        diff = np.max(np.abs(states["python"] - states["compiled"]))
        print(f"speed-up: {timings['python'] / timings['compiled']:.1f}x, max state difference {diff:.1e}")
    else:
        print("compiled kernel not built; rebuild with `pip install -e . --no-build-isolation`")


if __name__ == "__main__":
    main()
