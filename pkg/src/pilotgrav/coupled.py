"""The coupled two-particle loop: wave evolution with feedback, trajectories,
the interval-impulse controller, and diagnostics.

Per step the loop (1) evaluates the overlap indicator and opens or closes
the interaction window, (2) accumulates both particles' feedback fields
while the window is open, (3) evolves each conditional wave one split step
under its effective phase potential and amplitude source, (4) refreshes the
guidance velocity from the fresh wave and advances the position (or jumps
it, in the discrete mode), (5) evaluates the two coupling residuals and
lets the controller nudge the interparticle interval, and (6) records
diagnostics.

Update schemes: ``simultaneous`` reads the other particle's state as of the
step start for both updates, which makes one full step commute exactly with
the mirror map (x -> -x, particles swapped); ``sequential`` lets the
second-updated particle see the first's fresh position and velocity, so the
seeded update order genuinely matters and seeds produce distinct runs. The
order is set by the seeded initial velocity directions: particle 1 leads
when its direction is +1, else particle 2 leads.

Norm is deliberately not re-imposed during a run: the amplitude sources
inject and remove it, and the net gain of the pair is itself a diagnostic.
A run aborts (with a partial record) if a norm leaves [0.1, 10], a position
leaves the domain, or a jump probability overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import kernels
from ._version import __version__
from .numerics import (ComplexField, PhysicalConstants, SplitStepper,
                       make_grid, make_gaussian, overlap_indicator,  # noqa: F401 (re-export)
                       spatial_derivative, polar_reconstruct)
from .potentials import (FeedbackAccumulator, GravityParams,
                         conditional_potential)
from .trajectories import (ParticleState, ProbabilityOverflowError,
                           vink_kernel)


class _DomainEscape(Exception):
    def __init__(self, particle: int):
        self.particle = particle


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


_CHOICES = {
    "feedback_sign": ("+", "-"),
    "f2_variant": ("analytic", "printed"),
    "trajectory_mode": ("guidance", "vink"),
    "update_scheme": ("simultaneous", "sequential"),
    "impulse_mode": ("supplement", "replace"),
    "derivative_scheme": ("spectral", "fd"),
}


@dataclass
class SimulationConfig:
    """Full coupled-run configuration.

    Grid, step, horizon, and constants pin the reference parameter point (N=1000,
    L=100, dt=0.01, T=1000, all constants 1). The free knobs default to the
    calibrated bound-core regime: packets of width ~softening^(3/4) sitting
    inside each other's softened wells (so they neither disperse nor escape
    over the full horizon), a short feedback window cap, and a gentle
    impulse gain. See the README for how each default was chosen and what
    moving it does.
    """

    n_points: int = 1000
    length: float = 100.0
    dt: float = 0.01
    total_time: float = 1000.0
    hbar: float = 1.0
    G: float = 1.0
    m1: float = 1.0
    m2: float = 1.0
    separation: float = 1.0
    sigma: float = 6.45
    phase1: float = 0.0
    phase2: float = 0.0
    softening: float = 12.0
    overlap_threshold: float = 0.01
    impulse_gain: float = 0.1
    dead_band: float = 1e-6
    feedback_sign: str = "+"
    f2_variant: str = "analytic"
    trajectory_mode: str = "guidance"
    update_scheme: str = "sequential"
    impulse_mode: str = "supplement"
    derivative_scheme: str = "spectral"
    tau_cap: float | None = 10.0
    interactions_enabled: bool = True
    initial_directions: tuple | None = None
    seed: int = 0
    record_waves_every: int = 0

    def validate(self):
        if self.n_points < 8:
            raise ConfigError("n_points: must be >= 8")
        for key in ("length", "dt", "total_time", "hbar", "G", "m1", "m2",
                    "sigma", "impulse_gain", "dead_band"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key}: must be positive")
        for key in ("separation", "softening", "phase1", "phase2"):
            if not math.isfinite(getattr(self, key)):
                raise ConfigError(f"{key}: must be finite")
        if self.softening < 0:
            raise ConfigError("softening: must be nonnegative")
        if not self.overlap_threshold > 0:
            raise ConfigError("overlap_threshold: must be positive")
        if self.tau_cap is not None and not self.tau_cap > 0:
            raise ConfigError("tau_cap: must be positive or null")
        for key, allowed in _CHOICES.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key}: must be one of {allowed}")
        if self.initial_directions is not None:
            dirs = tuple(self.initial_directions)
            if len(dirs) != 2 or any(d not in (-1, 1) for d in dirs):
                raise ConfigError("initial_directions: must be a (+-1, +-1) pair")
        if self.record_waves_every < 0:
            raise ConfigError("record_waves_every: must be >= 0")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / self.dt))

    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(self.hbar, self.G, self.m1, self.m2)


@dataclass
class RunRecord:
    """Per-step series plus the run manifest."""
    time: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    norm1: np.ndarray
    norm2: np.ndarray
    residual_first: np.ndarray
    residual_second: np.ndarray
    net_gain: np.ndarray
    overlap: np.ndarray
    distance: np.ndarray
    config: SimulationConfig
    directions: tuple
    abort_status: str | None = None
    aborted_step: int | None = None
    boundary_flagged: bool = False
    node_retries: int = 0
    impulse_count: int = 0
    first_interaction_time: float | None = None
    first_impulse_time: float | None = None
    wave_snapshots: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def n_recorded(self) -> int:
        return self.time.shape[0]

    def manifest(self) -> dict:
        cfg = asdict(self.config)
        if cfg["initial_directions"] is not None:
            cfg["initial_directions"] = list(cfg["initial_directions"])
        return {
            "config": cfg,
            "seed": self.config.seed,
            "version": self.version,
            "directions": list(self.directions),
            "abort_status": self.abort_status,
            "aborted_step": self.aborted_step,
            "boundary_flagged": self.boundary_flagged,
            "node_retries": self.node_retries,
            "impulse_count": self.impulse_count,
            "first_interaction_time": self.first_interaction_time,
            "first_impulse_time": self.first_impulse_time,
        }


def effective_fields(grid, other_position: float, other_velocity: float,
                     other_mass: float, acc: FeedbackAccumulator,
                     params: GravityParams):
    """Phase potential and amplitude source seen by one particle.

    With an inactive accumulator this reduces to the bare conditional
    potential and a zero source. The second-order integral shifts the
    phase potential by -hbar/(2 m_other) * I2; the first-order integral
    feeds the amplitude as (v_other/hbar) * I1. The relative conditional
    potential enters only through the differences already inside the
    integrals (its direct term is a position-independent gauge).
    """
    hbar = params.constants.hbar
    phase = conditional_potential(grid, other_position, params)
    if acc.active:
        phase = phase - (hbar / (2.0 * other_mass)) * acc.integral_second
        amplitude = (other_velocity / hbar) * acc.integral_first
    else:
        amplitude = np.zeros(grid.n_points)
    return phase, amplitude


def _interp(values: np.ndarray, grid, position: float) -> float:
    return float(kernels.cubic_interp(values, grid.x[0],
                                      1.0 / grid.spacing, position))


def coupling_residual_first(acc1: FeedbackAccumulator, acc2: FeedbackAccumulator,
                            v1: float, v2: float, r1_ref: float, r2_ref: float,
                            x1: float, x2: float,
                            constants: PhysicalConstants) -> float:
    """(r1/hbar) v2 I1(X1) + (r2/hbar) v1 I2(X2), each integral at its own particle."""
    hbar = constants.hbar
    i1 = _interp(acc1.integral_first, acc1.grid, x1)
    i2 = _interp(acc2.integral_first, acc2.grid, x2)
    return (r1_ref / hbar) * v2 * i1 + (r2_ref / hbar) * v1 * i2


def coupling_residual_second(acc1: FeedbackAccumulator, acc2: FeedbackAccumulator,
                             x1: float, x2: float,
                             constants: PhysicalConstants) -> float:
    """(hbar/2m2) I1^(2)(X1) + (hbar/2m1) I2^(2)(X2)."""
    hbar = constants.hbar
    i1 = _interp(acc1.integral_second, acc1.grid, x1)
    i2 = _interp(acc2.integral_second, acc2.grid, x2)
    return hbar / (2.0 * constants.m2) * i1 + hbar / (2.0 * constants.m1) * i2


def stable_strategy_step(residual_first: float, residual_second: float,
                         state1: ParticleState, state2: ParticleState,
                         impulse_gain: float, dead_band: float):
    """Symmetric velocity impulses steering the interparticle interval.

    Inside the dead band nothing happens. Otherwise the relative velocity
    changes by impulse_gain * |residual_second|, split equally and
    oppositely, directed to widen the interval when residual_first > 0 and
    to close it when residual_first < 0.
    """
    if not impulse_gain > 0:
        raise ValueError("impulse_gain must be positive")
    if abs(residual_first) <= dead_band:
        return state1, state2
    dv = impulse_gain * abs(residual_second)
    outward = 1.0 if state2.position >= state1.position else -1.0
    direction = 1.0 if residual_first > 0 else -1.0
    half = 0.5 * direction * outward * dv
    return (replace(state1, velocity=state1.velocity - half),
            replace(state2, velocity=state2.velocity + half))


def net_gain(norm_series_1: np.ndarray, norm_series_2: np.ndarray,
             dt: float) -> np.ndarray:
    """Forward-difference derivative of the summed norms; last sample repeated."""
    if norm_series_1.shape != norm_series_2.shape:
        raise ValueError("norm series length mismatch")
    total = np.asarray(norm_series_1) + np.asarray(norm_series_2)
    out = np.empty_like(total)
    if total.shape[0] > 1:
        out[:-1] = np.diff(total) / dt
        out[-1] = out[-2]
    else:
        out[:] = 0.0
    return out


def continuity_residual(polar_prev, polar_next, integral_first: np.ndarray,
                        other_velocity: float, mass: float,
                        constants: PhysicalConstants, dt: float):
    """Pointwise residual of the single-particle continuity balance.

    d rho/dt (forward difference) + div J (time-midpoint, spectral) minus
    the amplitude-source gain 2 rho v_other I1 / hbar; vanishes to
    discretization error under the implemented evolution. Returns
    (residual_field, max_abs_over_valid); the field is zeroed off-mask.
    """
    hbar = constants.hbar
    rho_prev = polar_prev.amplitude ** 2
    rho_next = polar_next.amplitude ** 2
    drho_dt = (rho_next - rho_prev) / dt

    def flux(polar):
        psi = polar_reconstruct(polar, hbar)
        deriv = spatial_derivative(psi, 1)
        return hbar / mass * np.imag(np.conj(psi.values) * deriv.values)

    j_mid = 0.5 * (flux(polar_prev) + flux(polar_next))
    grid = polar_prev.grid
    k = grid.wavenumbers
    div_j = np.fft.ifft(1j * k * np.fft.fft(j_mid)).real
    rho_mid = 0.5 * (rho_prev + rho_next)
    residual = drho_dt + div_j - (2.0 * rho_mid / hbar) * other_velocity * integral_first
    mask = polar_prev.valid & polar_next.valid
    residual = np.where(mask, residual, 0.0)
    return residual, float(np.max(np.abs(residual)))


class _Accumulators:
    """Mutable in-loop twin of FeedbackAccumulator (one pair of integrals per particle)."""

    def __init__(self, n: int):
        self.first_1 = np.zeros(n)
        self.second_1 = np.zeros(n)
        self.first_2 = np.zeros(n)
        self.second_2 = np.zeros(n)
        self.window = 0.0
        self.active = False

    def reset(self):
        self.first_1[:] = 0.0
        self.second_1[:] = 0.0
        self.first_2[:] = 0.0
        self.second_2[:] = 0.0
        self.window = 0.0
        self.active = False

    def view(self, grid, particle: int) -> FeedbackAccumulator:
        first = self.first_1 if particle == 1 else self.first_2
        second = self.second_1 if particle == 1 else self.second_2
        return FeedbackAccumulator(grid=grid, integral_first=first.copy(),
                                   integral_second=second.copy(),
                                   window_elapsed=self.window, active=self.active)


def run_coupled(config: SimulationConfig) -> RunRecord:
    config.validate()
    grid = make_grid(config.n_points, config.length)
    constants = config.constants()
    params = GravityParams(constants, config.softening)
    dt = config.dt
    hbar = config.hbar
    gmm = config.G * config.m1 * config.m2
    eps = config.softening
    sign = 1.0 if config.feedback_sign == "+" else -1.0
    f2code = (kernels.F2_ANALYTIC if config.f2_variant == "analytic"
              else kernels.F2_PRINTED)
    tau_cap = math.inf if config.tau_cap is None else config.tau_cap
    x = grid.x
    ik = 1j * grid.wavenumbers
    inv_dx = 1.0 / grid.spacing
    x0 = x[0]
    half_len = config.length / 2.0
    n_edge = max(1, int(np.ceil(0.05 * grid.n_points / 2.0)))

    rng = np.random.default_rng(config.seed)
    if config.initial_directions is not None:
        directions = tuple(int(d) for d in config.initial_directions)
    else:
        directions = tuple(int(d) for d in rng.integers(0, 2, size=2) * 2 - 1)
    order = (1, 2) if directions[0] == 1 else (2, 1)
    sequential = config.update_scheme == "sequential"

    psi = {
        1: make_gaussian(grid, -config.separation / 2.0, config.sigma,
                         config.phase1).values,
        2: make_gaussian(grid, config.separation / 2.0, config.sigma,
                         config.phase2).values,
    }
    pos = {1: -config.separation / 2.0, 2: config.separation / 2.0}
    vel = {1: 0.0, 2: 0.0}
    site = {}
    if config.trajectory_mode == "vink":
        site = {p: int(np.argmin(np.abs(x - pos[p]))) for p in (1, 2)}
        pos = {p: float(x[site[p]]) for p in (1, 2)}
    mass = {1: config.m1, 2: config.m2}
    stepper = {p: SplitStepper(grid, mass[p], dt, constants) for p in (1, 2)}

    acc = _Accumulators(grid.n_points)
    n_steps = config.n_steps
    cols = {name: np.empty(n_steps) for name in
            ("time", "x1", "x2", "v1", "v2", "norm1", "norm2",
             "residual_first", "residual_second", "overlap", "distance")}

    abort_status = None
    aborted_step = None
    boundary_flagged = False
    node_retries = 0
    impulse_count = 0
    first_interaction_time = None
    first_impulse_time = None
    wave_snapshots = {}

    recorded = 0
    for step in range(n_steps):
        t_next = (step + 1) * dt
        abs1 = np.abs(psi[1])
        abs2 = np.abs(psi[2])
        overlap = float(abs1 @ abs2) * grid.spacing

        # (1) interaction window
        if config.interactions_enabled and overlap > config.overlap_threshold:
            if not acc.active:
                acc.reset()
                acc.active = True
                if first_interaction_time is None:
                    first_interaction_time = step * dt
        elif acc.active:
            acc.reset()

        # (2) feedback accumulation on the frozen step-start positions
        if acc.active and acc.window < tau_cap:
            f1, f2 = kernels.feedback_pair(x, pos[1], pos[2], gmm, eps,
                                           1, sign, f2code)
            acc.first_1 += f1 * dt
            acc.second_1 += f2 * dt
            f1, f2 = kernels.feedback_pair(x, pos[1], pos[2], gmm, eps,
                                           2, sign, f2code)
            acc.first_2 += f1 * dt
            acc.second_2 += f2 * dt
            acc.window += dt

        # (3)+(4) wave evolution and position advance
        snap_pos = dict(pos)
        snap_vel = dict(vel)
        prestep_pos = dict(pos)
        try:
            for p in order:
                q = 2 if p == 1 else 1
                other_x = pos[q] if sequential else snap_pos[q]
                other_v = vel[q] if sequential else snap_vel[q]
                phase_pot = -gmm / np.sqrt((x - other_x) ** 2 + eps * eps)
                amp_src = None
                if acc.active:
                    i2 = acc.second_1 if p == 1 else acc.second_2
                    phase_pot -= (hbar / (2.0 * mass[q])) * i2
                    if other_v != 0.0:
                        i1 = acc.first_1 if p == 1 else acc.first_2
                        amp_src = (other_v / hbar) * i1
                values = stepper[p].step_values(psi[p], phase_pot, amp_src)
                psi[p] = values
                if config.derivative_scheme == "fd":
                    deriv = (np.roll(values, -1) - np.roll(values, 1)) * (0.5 * inv_dx)
                else:
                    deriv = np.fft.ifft(ik * np.fft.fft(values))
                absv = np.abs(values)
                r_min = 1e-6 * float(absv.max())
                j = int(math.floor((pos[p] - x0) * inv_dx))
                idx = np.array([j - 1, j, j + 1, j + 2]) % grid.n_points
                if float(np.min(absv[idx])) < r_min:
                    node_retries += 1  # hold the previous velocity at a node
                else:
                    val = kernels.cubic_interp(values, x0, inv_dx, pos[p])
                    dva = kernels.cubic_interp(deriv, x0, inv_dx, pos[p])
                    vel[p] = hbar / mass[p] * (dva / val).imag
                if config.trajectory_mode == "vink":
                    kern = vink_kernel(ComplexField(grid, values), mass[p],
                                       dt, constants)
                    u = rng.random()
                    s = site[p]
                    if u < kern.p_left[s]:
                        s = (s - 1) % grid.n_points
                    elif u < kern.p_left[s] + kern.p_right[s]:
                        s = (s + 1) % grid.n_points
                    site[p] = s
                    pos[p] = float(x[s])
                else:
                    pos[p] = pos[p] + vel[p] * dt
                if not abs(pos[p]) < half_len:
                    raise _DomainEscape(p)
        except _DomainEscape:
            abort_status = "domain_escape"
            aborted_step = step
        except ProbabilityOverflowError:
            abort_status = "vink_overflow"
            aborted_step = step

        if abort_status is not None:
            break

        # (5) coupling residuals drive the interval controller
        r1_ref = float(kernels.cubic_interp(np.abs(psi[1]), x0, inv_dx, pos[1]))
        r2_ref = float(kernels.cubic_interp(np.abs(psi[2]), x0, inv_dx, pos[2]))
        i1f = float(kernels.cubic_interp(acc.first_1, x0, inv_dx, pos[1]))
        i2f = float(kernels.cubic_interp(acc.first_2, x0, inv_dx, pos[2]))
        i1s = float(kernels.cubic_interp(acc.second_1, x0, inv_dx, pos[1]))
        i2s = float(kernels.cubic_interp(acc.second_2, x0, inv_dx, pos[2]))
        res1 = (r1_ref / hbar) * vel[2] * i1f + (r2_ref / hbar) * vel[1] * i2f
        res2 = (hbar / (2.0 * mass[2])) * i1s + (hbar / (2.0 * mass[1])) * i2s

        if acc.active and abs(res1) > config.dead_band:
            dv = config.impulse_gain * abs(res2)
            if dv > 0.0:
                outward = 1.0 if pos[2] >= pos[1] else -1.0
                direction = 1.0 if res1 > 0 else -1.0
                half = 0.5 * direction * outward * dv
                lattice = config.trajectory_mode == "vink"
                if config.impulse_mode == "replace":
                    if not lattice:
                        pos[1] = prestep_pos[1] - half * dt
                        pos[2] = prestep_pos[2] + half * dt
                    vel[1] = -half
                    vel[2] = half
                else:
                    # jump positions live on the lattice: the impulse feeds
                    # the recorded velocity (and so next step's amplitude
                    # sources and residuals) without detaching pos from site
                    if not lattice:
                        pos[1] -= half * dt
                        pos[2] += half * dt
                    vel[1] -= half
                    vel[2] += half
                impulse_count += 1
                if first_impulse_time is None:
                    first_impulse_time = t_next

        # (6) diagnostics
        norm1 = float(np.vdot(psi[1], psi[1]).real) * grid.spacing
        norm2 = float(np.vdot(psi[2], psi[2]).real) * grid.spacing
        rho_edges = (np.abs(psi[1][:n_edge]) ** 2).sum() + (np.abs(psi[1][-n_edge:]) ** 2).sum()
        if rho_edges * grid.spacing > 1e-6 * norm1:
            boundary_flagged = True
        rho_edges = (np.abs(psi[2][:n_edge]) ** 2).sum() + (np.abs(psi[2][-n_edge:]) ** 2).sum()
        if rho_edges * grid.spacing > 1e-6 * norm2:
            boundary_flagged = True

        cols["time"][recorded] = t_next
        cols["x1"][recorded] = pos[1]
        cols["x2"][recorded] = pos[2]
        cols["v1"][recorded] = vel[1]
        cols["v2"][recorded] = vel[2]
        cols["norm1"][recorded] = norm1
        cols["norm2"][recorded] = norm2
        cols["residual_first"][recorded] = res1
        cols["residual_second"][recorded] = res2
        cols["overlap"][recorded] = overlap
        cols["distance"][recorded] = abs(pos[2] - pos[1])
        recorded += 1

        if config.record_waves_every and (step + 1) % config.record_waves_every == 0:
            wave_snapshots[step + 1] = (psi[1].copy(), psi[2].copy())

        if not (0.1 < norm1 < 10.0) or not (0.1 < norm2 < 10.0):
            abort_status = "norm_blowup"
            aborted_step = step
            break

    for name in cols:
        cols[name] = cols[name][:recorded]
    gain_series = (net_gain(cols["norm1"], cols["norm2"], dt)
                   if recorded else np.empty(0))

    return RunRecord(
        time=cols["time"], x1=cols["x1"], x2=cols["x2"],
        v1=cols["v1"], v2=cols["v2"],
        norm1=cols["norm1"], norm2=cols["norm2"],
        residual_first=cols["residual_first"],
        residual_second=cols["residual_second"],
        net_gain=gain_series,
        overlap=cols["overlap"], distance=cols["distance"],
        config=config, directions=directions,
        abort_status=abort_status, aborted_step=aborted_step,
        boundary_flagged=boundary_flagged, node_retries=node_retries,
        impulse_count=impulse_count,
        first_interaction_time=first_interaction_time,
        first_impulse_time=first_impulse_time,
        wave_snapshots=wave_snapshots,
    )


def quiet_window_net_gain(record: RunRecord, dead_band: float | None = None):
    """Largest per-window mean |net gain| over maximal windows where both
    residuals stay inside the dead band; None when no step qualifies."""
    if dead_band is None:
        dead_band = record.config.dead_band
    quiet = ((np.abs(record.residual_first) < dead_band)
             & (np.abs(record.residual_second) < dead_band))
    if not quiet.any():
        return None
    worst = 0.0
    start = None
    for i, flag in enumerate(quiet):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            worst = max(worst, float(np.mean(np.abs(record.net_gain[start:i]))))
            start = None
    if start is not None:
        worst = max(worst, float(np.mean(np.abs(record.net_gain[start:]))))
    return worst
