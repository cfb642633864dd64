"""Phase-accumulation entanglement witness over a two-path interferometer pair.

Each particle travels a left or right arm; a branch pair (i, j) at
separation d_ij accumulates phase gamma / d_ij. The four-branch state
(|LL> e^{i phi_LL} + |LR> e^{i phi_LR} + |RL> e^{i phi_RL} + |RR> e^{i phi_RR})/2
is scored with the standard two-qubit spin-correlation witness

    W = | <sigma_x x sigma_z> + <sigma_y x sigma_y> |

whose value exceeds 1 only for entangled states. The witness is pluggable:
``sweep_witness`` accepts any callable mapping four phases to a score, so a
different correlation form can be substituted without touching the sweep.

Geometry: d_LL = d_RR = R, d_LR = R + (dx_wide + dx_split),
d_RL = R - (dx_wide + dx_split), a reconstruction of the arm layout from
the wide and split offsets; curves are therefore meaningful for their
ordering and threshold crossings rather than pointwise values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

THRESHOLD = 1.0


@dataclass(frozen=True)
class WitnessConfig:
    delta_x_wide: float = 0.25
    delta_x_split: float = 0.1
    gammas: tuple = (0.05, 0.1, 0.2)
    r_values: np.ndarray = field(
        default_factory=lambda: np.round(np.arange(0.40, 4.0001, 0.005), 10))
    distance_floor: float = 1e-9

    def __post_init__(self):
        if any(g <= 0 for g in self.gammas):
            raise ValueError("gamma values must be positive")
        r = np.asarray(self.r_values, dtype=np.float64)
        object.__setattr__(self, "r_values", r)
        offset = self.delta_x_wide + self.delta_x_split
        if np.any(r - offset <= self.distance_floor):
            raise ValueError(
                "r_values must keep every branch distance above the floor")


@dataclass(frozen=True)
class WitnessCurve:
    gamma: float
    r_values: np.ndarray
    w_values: np.ndarray
    threshold: float = THRESHOLD


def branch_phases(r: float, gamma: float, config: WitnessConfig):
    """(phi_LL, phi_LR, phi_RL, phi_RR) = gamma / branch distance."""
    offset = config.delta_x_wide + config.delta_x_split
    distances = (r, r + offset, r - offset, r)
    if min(distances) <= config.distance_floor:
        raise ValueError(f"branch distance not positive at R={r}")
    return tuple(gamma / d for d in distances)


def witness_value(phases) -> float:
    """W = |<sigma_x sigma_z> + <sigma_y sigma_y>| on the four-branch state."""
    ll, lr, rl, rr = phases
    xz = 0.5 * (np.cos(ll - rl) - np.cos(lr - rr))
    yy = -0.5 * (np.cos(ll - rr) - np.cos(lr - rl))
    return float(abs(xz + yy))


def witness_value_density_matrix(phases) -> float:
    """Same witness via the explicit 4x4 density matrix; the oracle path."""
    psi = 0.5 * np.exp(1j * np.asarray(phases, dtype=np.float64))
    rho = np.outer(psi, psi.conj())
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    op = np.kron(sx, sz) + np.kron(sy, sy)
    return float(abs(np.trace(rho @ op).real))


def sweep_witness(config: WitnessConfig, witness=witness_value):
    """One WitnessCurve per gamma, sampled over the configured separations."""
    curves = []
    for gamma in config.gammas:
        w = np.array([witness(branch_phases(float(r), gamma, config))
                      for r in config.r_values])
        curves.append(WitnessCurve(gamma=gamma, r_values=config.r_values,
                                   w_values=w))
    return curves


def curves_to_rows(curves):
    """CSV rows (header first): R, one W column per gamma, threshold."""
    header = ["R"] + [f"W_gamma{c.gamma:g}" for c in curves] + ["threshold"]
    rows = [header]
    r_values = curves[0].r_values
    for i, r in enumerate(r_values):
        rows.append([repr(float(r))]
                    + [repr(float(c.w_values[i])) for c in curves]
                    + [repr(float(THRESHOLD))])
    return rows
