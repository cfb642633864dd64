"""Deterministic 1D simulator of two gravitationally coupled conditional
wave functions with feedback terms, pilot-wave and discrete stochastic
trajectories, a better-response Nash solver, and an entanglement-witness
sweep."""

from ._version import __version__
from .numerics import (ComplexField, PhysicalConstants, PolarField,
                       SpatialGrid, SplitStepper, evolve_step, make_gaussian,
                       make_grid, norm, normalize, overlap_indicator,
                       packet_width, polar_decompose, spatial_derivative)
from .potentials import (FeedbackAccumulator, GravityParams,
                         accumulate_feedback, conditional_potential,
                         feedback_first, feedback_second,
                         relative_conditional_potential, reset_feedback)
from .trajectories import (JumpKernel, ParticleState, advance_position,
                           bohmian_velocity, probability_current, sample_jump,
                           vink_kernel)
from .coupled import (RunRecord, SimulationConfig, coupling_residual_first,
                      coupling_residual_second, continuity_residual,
                      effective_fields, net_gain, run_coupled,
                      stable_strategy_step)
from .nash import (BimatrixGame, StrategyProfile, advantage_step,
                   best_response_check, enumerate_equilibria_small,
                   expected_utility, find_equilibrium, gain)
from .witness import (WitnessConfig, WitnessCurve, branch_phases,
                      sweep_witness, witness_value)

__all__ = [name for name in dir() if not name.startswith("_")]
