"""Conditional gravitational potentials and the feedback fields they source.

The 1/|d| kernel is softened Plummer-style to 1/sqrt(d^2 + eps^2); the same
eps enters the potentials and the feedback fields so that differentiating
one reproduces the other exactly at the formula level.

Two second-order variants ship. ``analytic`` is the exact second
derivative of the softened kernel and passes the finite-difference oracle;
``printed`` evaluates the printed expression verbatim (its cubed
numerator term is dimensionally inconsistent with the derivative, which the
``feedback-check`` CLI subcommand quantifies). The first-order field keeps
the printed overall sign by default; ``sign=-1`` selects the direct
derivative convention instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .numerics import PhysicalConstants, SpatialGrid


class SingularEvaluationError(ZeroDivisionError):
    """Unsoftened kernel evaluated at zero separation."""


@dataclass(frozen=True)
class GravityParams:
    constants: PhysicalConstants
    softening: float = 0.0

    def __post_init__(self):
        if self.softening < 0.0:
            raise ValueError("softening must be nonnegative")

    @property
    def coupling(self) -> float:
        c = self.constants
        return c.G * c.m1 * c.m2


def _softened_distance(delta, eps: float):
    d = np.sqrt(delta * delta + eps * eps)
    if np.any(np.asarray(d) == 0.0):
        raise SingularEvaluationError(
            "zero separation with zero softening; set softening > 0")
    return d


def conditional_potential(grid: SpatialGrid, other_position: float,
                          params: GravityParams) -> np.ndarray:
    """-G m1 m2 / sqrt((x - X_other)^2 + eps^2), strictly negative."""
    d = _softened_distance(grid.x - other_position, params.softening)
    return -params.coupling / d


def relative_conditional_potential(x1: float, x2: float,
                                   params: GravityParams) -> float:
    """-G m1 m2 / sqrt((X1 - X2)^2 + eps^2)."""
    d = _softened_distance(np.float64(x1 - x2), params.softening)
    return float(-params.coupling / d)


def _check_feedback_singularity(grid: SpatialGrid, x1: float, x2: float,
                                params: GravityParams, particle: int):
    if params.softening > 0.0:
        return
    source = x2 if particle == 1 else x1
    if x1 == x2 or np.any(grid.x == source):
        raise SingularEvaluationError(
            "unsoftened feedback field evaluated at zero separation; "
            "set softening > 0")


def feedback_first(grid: SpatialGrid, x1: float, x2: float,
                   params: GravityParams, particle: int = 1,
                   sign: float = 1.0) -> np.ndarray:
    """First-order feedback field (gradient difference) for one particle.

    particle=1 evaluates u = x - x2, particle=2 evaluates u = x1 - x; both
    subtract the same trajectory-level reference term. sign=+1 is the
    printed convention; the direct derivative of the conditional
    potential carries the opposite overall sign.
    """
    _check_feedback_singularity(grid, x1, x2, params, particle)
    f1, _ = kernels.feedback_pair(grid.x, float(x1), float(x2),
                                  params.coupling, params.softening,
                                  particle, float(sign), kernels.F2_ANALYTIC)
    return f1


def feedback_second(grid: SpatialGrid, x1: float, x2: float,
                    params: GravityParams, particle: int = 1,
                    variant: str = "analytic") -> np.ndarray:
    """Second-order feedback field (second-derivative difference).

    variant="analytic": -G m1 m2 [ (2u^2-eps^2)/d^5 - (2U^2-eps^2)/D^5 ].
    variant="printed": the printed formula with softened absolute values.
    """
    if variant not in ("analytic", "printed"):
        raise ValueError(f"unknown feedback_second variant {variant!r}")
    _check_feedback_singularity(grid, x1, x2, params, particle)
    code = kernels.F2_ANALYTIC if variant == "analytic" else kernels.F2_PRINTED
    _, f2 = kernels.feedback_pair(grid.x, float(x1), float(x2),
                                  params.coupling, params.softening,
                                  particle, 1.0, code)
    return f2


@dataclass(frozen=True)
class FeedbackAccumulator:
    """Running time-integrals of the feedback fields over one interaction window."""
    grid: SpatialGrid
    integral_first: np.ndarray
    integral_second: np.ndarray
    window_elapsed: float
    active: bool

    @classmethod
    def inactive(cls, grid: SpatialGrid) -> "FeedbackAccumulator":
        zero = np.zeros(grid.n_points)
        return cls(grid=grid, integral_first=zero, integral_second=zero.copy(),
                   window_elapsed=0.0, active=False)

    def activated(self) -> "FeedbackAccumulator":
        zero = np.zeros(self.grid.n_points)
        return FeedbackAccumulator(grid=self.grid, integral_first=zero,
                                   integral_second=zero.copy(),
                                   window_elapsed=0.0, active=True)


def accumulate_feedback(acc: FeedbackAccumulator, f1: np.ndarray,
                        f2: np.ndarray, dt: float,
                        tau_cap: float = np.inf) -> FeedbackAccumulator:
    """Rectangle-rule accumulation; saturates (holds) once the window hits tau_cap."""
    if not acc.active:
        raise ValueError("cannot accumulate on an inactive accumulator")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if acc.window_elapsed >= tau_cap:
        return acc
    return FeedbackAccumulator(
        grid=acc.grid,
        integral_first=acc.integral_first + f1 * dt,
        integral_second=acc.integral_second + f2 * dt,
        window_elapsed=acc.window_elapsed + dt,
        active=True,
    )


def reset_feedback(acc: FeedbackAccumulator) -> FeedbackAccumulator:
    return FeedbackAccumulator.inactive(acc.grid)
