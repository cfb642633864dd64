"""Guidance-equation trajectories and discrete stochastic (jump) trajectories.

The continuous mode integrates dX/dt = (hbar/m) Im(psi'/psi) at X with an
explicit Euler step, re-reading the velocity from the freshly evolved wave
each step. The discrete mode walks lattice sites with nearest-neighbor jump
probabilities built from the probability current, the minimal kernel that
satisfies the discrete continuity equation: the ensemble mean displacement
reproduces the guidance velocity in smooth-density regions, and an ensemble
drawn from |psi|^2 stays |psi|^2-distributed under free evolution.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .numerics import ComplexField, PhysicalConstants, spatial_derivative


class NodeProximityError(ArithmeticError):
    """Velocity requested where the wave amplitude is below the node guard."""


class ProbabilityOverflowError(ValueError):
    """Jump probabilities exceed 1 somewhere; dt is too large for this state."""

    def __init__(self, site: int, total: float):
        self.site = site
        self.total = total
        super().__init__(
            f"jump probability {total:.3g} > 1 at site {site}; reduce dt")


class DomainEscapeError(RuntimeError):
    """A particle position left the domain interior."""


@dataclass(frozen=True)
class ParticleState:
    position: float
    velocity: float
    mass: float
    label: int


@dataclass(frozen=True)
class JumpKernel:
    p_left: np.ndarray
    p_right: np.ndarray
    p_stay: np.ndarray


def _stencil_min_abs(values: np.ndarray, grid, position: float) -> float:
    n = values.shape[0]
    j = int(np.floor((position - grid.x[0]) / grid.spacing))
    idx = np.array([j - 1, j, j + 1, j + 2]) % n
    return float(np.min(np.abs(values[idx])))


def bohmian_velocity(psi: ComplexField, position: float, mass: float,
                     constants: PhysicalConstants,
                     r_min: float | None = None,
                     psi_deriv: ComplexField | None = None) -> float:
    """(hbar/m) Im(psi'/psi) at the particle position, cubic-interpolated.

    Precomputing ``psi_deriv`` (the spectral first derivative) lets callers
    amortize the FFT across several evaluations of the same wave.
    """
    if r_min is None:
        r_min = 1e-6 * float(np.max(np.abs(psi.values)))
    if _stencil_min_abs(psi.values, psi.grid, position) < r_min:
        raise NodeProximityError(
            f"wave amplitude below {r_min:.3g} near x={position:.6g}")
    if psi_deriv is None:
        psi_deriv = spatial_derivative(psi, 1)
    x0 = psi.grid.x[0]
    inv_dx = 1.0 / psi.grid.spacing
    val = kernels.cubic_interp(psi.values, x0, inv_dx, position)
    der = kernels.cubic_interp(psi_deriv.values, x0, inv_dx, position)
    return float(constants.hbar / mass * (der / val).imag)


def advance_position(state: ParticleState, velocity: float,
                     dt: float) -> ParticleState:
    """Explicit Euler step X <- X + v*dt; leaving the domain raises."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    new_x = state.position + velocity * dt
    return replace(state, position=new_x, velocity=velocity)


def check_inside(position: float, length: float):
    if not abs(position) < length / 2.0:
        raise DomainEscapeError(f"position {position:.6g} left the domain")


def probability_current(psi: ComplexField, mass: float,
                        constants: PhysicalConstants,
                        scheme: str = "spectral") -> np.ndarray:
    """J = (hbar/m) Im(conj(psi) psi')."""
    deriv = spatial_derivative(psi, 1, scheme=scheme)
    return constants.hbar / mass * np.imag(np.conj(psi.values) * deriv.values)


def vink_kernel(psi: ComplexField, mass: float, dt: float,
                constants: PhysicalConstants,
                density_floor: float | None = None) -> JumpKernel:
    """Nearest-neighbor jump probabilities from face-averaged currents.

    p_right(k) = max(0, J_{k+1/2}) dt / (P_k dx) and mirrored for p_left,
    which satisfies the discrete continuity equation exactly. Cells whose
    density sits below the floor are frozen (p_stay = 1).
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    current = probability_current(psi, mass, constants)
    prob = np.abs(psi.values) ** 2
    if density_floor is None:
        density_floor = 1e-12 * float(prob.max())
    face_right = 0.5 * (current + np.roll(current, -1))
    face_left = np.roll(face_right, 1)
    live = prob > density_floor
    scale = np.zeros_like(prob)
    scale[live] = dt / (prob[live] * psi.grid.spacing)
    p_right = np.maximum(face_right, 0.0) * scale
    p_left = np.maximum(-face_left, 0.0) * scale
    total = p_left + p_right
    if np.any(total > 1.0):
        site = int(np.argmax(total))
        raise ProbabilityOverflowError(site, float(total[site]))
    return JumpKernel(p_left=p_left, p_right=p_right, p_stay=1.0 - total)


def sample_jump(kernel: JumpKernel, site: int, rng: np.random.Generator) -> int:
    """Move one walker; left jump checked first, then right, else stay."""
    u = rng.random()
    n = kernel.p_left.shape[0]
    if u < kernel.p_left[site]:
        return (site - 1) % n
    if u < kernel.p_left[site] + kernel.p_right[site]:
        return (site + 1) % n
    return site


def sample_sites(psi: ComplexField, n_walkers: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Draw lattice sites from the |psi|^2 distribution."""
    prob = np.abs(psi.values) ** 2
    prob = prob / prob.sum()
    return rng.choice(psi.grid.n_points, size=n_walkers, p=prob).astype(np.int64)


def step_walkers(sites: np.ndarray, kernel: JumpKernel,
                 rng: np.random.Generator) -> np.ndarray:
    """Advance a whole walker ensemble one step."""
    uniforms = rng.random(sites.shape[0])
    return kernels.step_walkers(sites, kernel.p_left, kernel.p_right, uniforms)


def total_variation_distance(sites: np.ndarray, psi: ComplexField,
                             bins: int = 50) -> float:
    """TV distance between the walker histogram and |psi|^2, both binned."""
    grid = psi.grid
    edges = np.linspace(-grid.length / 2.0, grid.length / 2.0, bins + 1)
    walker_hist, _ = np.histogram(grid.x[sites], bins=edges)
    p = walker_hist / walker_hist.sum()
    rho = np.abs(psi.values) ** 2
    q_hist, _ = np.histogram(grid.x, bins=edges, weights=rho)
    q = q_hist / q_hist.sum()
    return 0.5 * float(np.abs(p - q).sum())


def run_equivariance_check(psi0: ComplexField, mass: float,
                           constants: PhysicalConstants, dt: float,
                           t_final: float, n_walkers: int,
                           seed: int, bins: int = 50) -> float:
    """Free-evolve psi and a |psi0|^2 ensemble together; return the final TV distance."""
    from .numerics import SplitStepper

    rng = np.random.default_rng(seed)
    sites = sample_sites(psi0, n_walkers, rng)
    stepper = SplitStepper(psi0.grid, mass, dt, constants)
    values = psi0.values
    psi = psi0
    n_steps = int(round(t_final / dt))
    for _ in range(n_steps):
        kernel = vink_kernel(psi, mass, dt, constants)
        sites = step_walkers(sites, kernel, rng)
        values = stepper.step_values(values, None, None)
        psi = ComplexField(psi0.grid, values)
    return total_variation_distance(sites, psi, bins=bins)
