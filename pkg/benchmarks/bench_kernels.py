"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run with the default jitted path:

    python benchmarks/bench_kernels.py

and compare against the fallback selected by the env flag:

    PILOTGRAV_NUMBA=0 python benchmarks/bench_kernels.py

On one process both paths are importable (the *_numpy names always exist;
the *_numba names exist unless the flag disabled them), so a single
invocation prints the side-by-side table. The FFT-bound propagation is
benchmarked once as context: it runs through numpy's pocketfft on either
path, which is why the split step itself carries no @njit variant.
"""

import time

import numpy as np

from pilotgrav import kernels
from pilotgrav.coupled import SimulationConfig, run_coupled
from pilotgrav.numerics import PhysicalConstants, SplitStepper, make_gaussian, make_grid

N = 1000
REPS = 2000


def timeit(fn, *args, reps=REPS):
    fn(*args)  # warm-up (and jit compile)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def main():
    grid = make_grid(N, 100.0)
    psi = make_gaussian(grid, 0.0, 6.45).values * np.exp(0.3j * grid.x)
    vphase = -1.0 / np.sqrt(grid.x ** 2 + 144.0)
    source = 1e-3 * np.sin(grid.x)
    sites = np.random.default_rng(0).integers(200, 800, 100_000).astype(np.int64)
    uniforms = np.random.default_rng(1).random(100_000)
    p_left = np.full(N, 0.05)
    p_right = np.full(N, 0.05)

    cases = [
        ("apply_half_phase", (psi, vphase, -0.005)),
        ("apply_gain", (psi, source, 0.01)),
        ("feedback_pair", (grid.x, -0.5, 0.5, 1.0, 12.0, 1, 1.0,
                           kernels.F2_ANALYTIC)),
        ("cubic_interp", (psi, grid.x[0], 1.0 / grid.spacing, 0.37)),
        ("step_walkers", (sites, p_left, p_right, uniforms)),
    ]

    print(f"kernel benchmark: N={N}, reps={REPS}, "
          f"default path = {'numba' if kernels.USING_NUMBA else 'numpy'}")
    print(f"{'kernel':<18} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, args in cases:
        t_np = timeit(getattr(kernels, name + "_numpy"), *args)
        row = f"{name:<18} {t_np * 1e6:>10.1f}us"
        if kernels.USING_NUMBA:
            t_nb = timeit(getattr(kernels, name + "_numba"), *args)
            row += f" {t_nb * 1e6:>10.1f}us {t_np / t_nb:>8.1f}x"
        else:
            row += f" {'-':>12} {'-':>9}"
        print(row)

    stepper = SplitStepper(grid, 1.0, 0.01, PhysicalConstants())
    t_fft = timeit(lambda: stepper.step_values(psi, vphase, source), reps=REPS)
    print(f"{'split step (fft)':<18} {t_fft * 1e6:>10.1f}us   (numpy fft on both paths)")

    cfg = SimulationConfig(total_time=5.0, initial_directions=(1, -1))
    t0 = time.perf_counter()
    run_coupled(cfg)
    per_step = (time.perf_counter() - t0) / cfg.n_steps
    print(f"coupled loop: {per_step * 1e6:.0f}us/step "
          f"-> T=1000 in ~{per_step * 100_000:.0f}s")


if __name__ == "__main__":
    main()
