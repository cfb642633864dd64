"""Hot numeric kernels, each with a numba-jitted and a pure-numpy implementation.

The jitted path is used by default. Set the environment variable
``PILOTGRAV_NUMBA=0`` before import to force the numpy fallback (the
benchmark in ``benchmarks/bench_kernels.py`` times both). Both paths
implement identical arithmetic; the FFT-based propagation itself stays in
numpy on either path because the transform dominates there and numba has no
FFT support.

Exported names: ``cubic_interp``, ``apply_half_phase``, ``apply_gain``,
``feedback_pair``, ``step_walkers``. The suffixed variants ``*_numpy`` and
(when available) ``*_numba`` are kept importable for benchmarking.
"""

import math
import os

import numpy as np

_want_numba = os.environ.get("PILOTGRAV_NUMBA", "1") != "0"

if _want_numba:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        _want_numba = False

USING_NUMBA = _want_numba

F2_ANALYTIC = 0
F2_PRINTED = 1


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def cubic_interp_numpy(values, x0, inv_dx, position):
    """4-point Lagrange interpolation of a periodic gridded field at one point."""
    n = values.shape[0]
    xi = (position - x0) * inv_dx
    j = math.floor(xi)
    t = xi - j
    wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w0 = (t * t - 1.0) * (t - 2.0) / 2.0
    w1 = -t * (t + 1.0) * (t - 2.0) / 2.0
    w2 = t * (t * t - 1.0) / 6.0
    return (wm1 * values[(j - 1) % n] + w0 * values[j % n]
            + w1 * values[(j + 1) % n] + w2 * values[(j + 2) % n])


def apply_half_phase_numpy(values, phase_potential, scale):
    """values * exp(i * scale * phase_potential), elementwise."""
    return values * np.exp(1j * scale * phase_potential)


def apply_gain_numpy(values, source, dt):
    """values * exp(source * dt), elementwise real gain."""
    return values * np.exp(source * dt)


def feedback_pair_numpy(x, x1, x2, gmm, eps, particle, sign, variant):
    """First- and second-order feedback fields for one particle.

    ``particle`` selects whose field: 1 uses u = x - x2, 2 uses u = x1 - x.
    ``sign`` multiplies the first-order field only (printed-sign switch).
    ``variant`` selects the second-order form: F2_ANALYTIC is the exact
    second derivative of the softened kernel, F2_PRINTED the verbatim
    printed expression.
    """
    if particle == 1:
        u = x - x2
    else:
        u = x1 - x
    big_u = x1 - x2
    eps2 = eps * eps
    du2 = u * u + eps2
    du = np.sqrt(du2)
    dU2 = big_u * big_u + eps2
    dU = math.sqrt(dU2)
    du3 = du2 * du
    dU3 = dU2 * dU
    f1 = sign * gmm * (u / du3 - big_u / dU3)
    if variant == F2_PRINTED:
        f2 = gmm * ((3.0 * u ** 3 - du) / du3 ** 2 - (3.0 * big_u ** 3 - dU) / dU3 ** 2)
    else:
        f2 = -gmm * ((2.0 * u * u - eps2) / (du3 * du2)
                     - (2.0 * big_u * big_u - eps2) / (dU3 * dU2))
    return f1, f2


def step_walkers_numpy(sites, p_left, p_right, uniforms):
    """Advance lattice walkers one step; left jump checked first, periodic wrap."""
    n = p_left.shape[0]
    pl = p_left[sites]
    pr = p_right[sites]
    go_left = uniforms < pl
    go_right = (~go_left) & (uniforms < pl + pr)
    return (sites - go_left.astype(np.int64) + go_right.astype(np.int64)) % n


# ---------------------------------------------------------------------------
# numba implementations (same arithmetic, loop-fused)
# ---------------------------------------------------------------------------

if USING_NUMBA:

    @njit(cache=True)
    def cubic_interp_numba(values, x0, inv_dx, position):
        n = values.shape[0]
        xi = (position - x0) * inv_dx
        j = int(math.floor(xi))
        t = xi - j
        wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0
        w0 = (t * t - 1.0) * (t - 2.0) / 2.0
        w1 = -t * (t + 1.0) * (t - 2.0) / 2.0
        w2 = t * (t * t - 1.0) / 6.0
        return (wm1 * values[(j - 1) % n] + w0 * values[j % n]
                + w1 * values[(j + 1) % n] + w2 * values[(j + 2) % n])

    @njit(cache=True)
    def apply_half_phase_numba(values, phase_potential, scale):
        out = np.empty_like(values)
        for i in range(values.shape[0]):
            a = scale * phase_potential[i]
            out[i] = values[i] * complex(math.cos(a), math.sin(a))
        return out

    @njit(cache=True)
    def apply_gain_numba(values, source, dt):
        out = np.empty_like(values)
        for i in range(values.shape[0]):
            out[i] = values[i] * math.exp(source[i] * dt)
        return out

    @njit(cache=True)
    def feedback_pair_numba(x, x1, x2, gmm, eps, particle, sign, variant):
        n = x.shape[0]
        f1 = np.empty(n, dtype=np.float64)
        f2 = np.empty(n, dtype=np.float64)
        eps2 = eps * eps
        big_u = x1 - x2
        dU2 = big_u * big_u + eps2
        dU = math.sqrt(dU2)
        dU3 = dU2 * dU
        ref1 = big_u / dU3
        if variant == F2_PRINTED:
            ref2 = (3.0 * big_u ** 3 - dU) / (dU3 * dU3)
        else:
            ref2 = (2.0 * big_u * big_u - eps2) / (dU3 * dU2)
        for i in range(n):
            if particle == 1:
                u = x[i] - x2
            else:
                u = x1 - x[i]
            du2 = u * u + eps2
            du = math.sqrt(du2)
            du3 = du2 * du
            f1[i] = sign * gmm * (u / du3 - ref1)
            if variant == F2_PRINTED:
                f2[i] = gmm * ((3.0 * u ** 3 - du) / (du3 * du3) - ref2)
            else:
                f2[i] = -gmm * ((2.0 * u * u - eps2) / (du3 * du2) - ref2)
        return f1, f2

    @njit(cache=True)
    def step_walkers_numba(sites, p_left, p_right, uniforms):
        n = p_left.shape[0]
        out = np.empty_like(sites)
        for i in range(sites.shape[0]):
            s = sites[i]
            u = uniforms[i]
            if u < p_left[s]:
                out[i] = (s - 1) % n
            elif u < p_left[s] + p_right[s]:
                out[i] = (s + 1) % n
            else:
                out[i] = s
        return out

    cubic_interp = cubic_interp_numba
    apply_half_phase = apply_half_phase_numba
    apply_gain = apply_gain_numba
    feedback_pair = feedback_pair_numba
    step_walkers = step_walkers_numba
else:
    cubic_interp = cubic_interp_numpy
    apply_half_phase = apply_half_phase_numpy
    apply_gain = apply_gain_numpy
    feedback_pair = feedback_pair_numpy
    step_walkers = step_walkers_numpy
