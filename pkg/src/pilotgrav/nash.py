"""Bimatrix games, the better-response (advantage) map, and equilibrium search.

The advantage map adds each action's nonnegative deviation gain to its
probability and renormalizes; its fixed points are exactly the Nash
equilibria. Plain iteration of the map provably cycles on games like
matching pennies, so the iterative solver supports damping and reports an
honest ``cycle`` / ``max_iter`` status instead of pretending convergence.
Support enumeration over small games provides the independent oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BimatrixGame:
    payoff_a: np.ndarray
    payoff_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.payoff_a, dtype=np.float64)
        b = np.asarray(self.payoff_b, dtype=np.float64)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError("payoff matrices must be 2-D with matching shapes")
        if a.min() < 0.0 or b.min() < 0.0:
            raise ValueError(
                "payoffs must be nonnegative; use from_payoffs(shift=True)")
        object.__setattr__(self, "payoff_a", a)
        object.__setattr__(self, "payoff_b", b)

    @classmethod
    def from_payoffs(cls, a, b, shift: bool = False) -> "BimatrixGame":
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if shift:
            a = a - min(a.min(), 0.0)
            b = b - min(b.min(), 0.0)
        return cls(a, b)

    @property
    def shape(self):
        return self.payoff_a.shape


def _check_simplex(p: np.ndarray, tol: float = 1e-9):
    if p.ndim != 1 or p.min() < -tol or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"not a probability vector: {p}")


@dataclass(frozen=True)
class StrategyProfile:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        _check_simplex(x)
        _check_simplex(y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def uniform(cls, shape) -> "StrategyProfile":
        m, n = shape
        return cls(np.full(m, 1.0 / m), np.full(n, 1.0 / n))


def expected_utility(profile: StrategyProfile, game: BimatrixGame,
                     player: int) -> float:
    if player == 1:
        return float(profile.x @ game.payoff_a @ profile.y)
    if player == 2:
        return float(profile.x @ game.payoff_b @ profile.y)
    raise ValueError(f"player must be 1 or 2, got {player}")


def pure_payoffs(profile: StrategyProfile, game: BimatrixGame,
                 player: int) -> np.ndarray:
    """Payoff of each pure action against the opponent's mixed strategy."""
    if player == 1:
        return game.payoff_a @ profile.y
    return profile.x @ game.payoff_b


def gain(profile: StrategyProfile, game: BimatrixGame, player: int,
         action: int) -> float:
    payoffs = pure_payoffs(profile, game, player)
    if not 0 <= action < payoffs.shape[0]:
        raise IndexError(f"action {action} out of range")
    return max(0.0, float(payoffs[action]) - expected_utility(profile, game, player))


def _gain_vector(profile, game, player) -> np.ndarray:
    payoffs = pure_payoffs(profile, game, player)
    return np.maximum(0.0, payoffs - expected_utility(profile, game, player))


def advantage_step(profile: StrategyProfile, game: BimatrixGame) -> StrategyProfile:
    """One application of the better-response map; fixed iff all gains vanish."""
    gx = _gain_vector(profile, game, 1)
    gy = _gain_vector(profile, game, 2)
    x = profile.x + gx
    y = profile.y + gy
    return StrategyProfile(x / x.sum(), y / y.sum())


def max_gain(profile: StrategyProfile, game: BimatrixGame) -> float:
    return max(_gain_vector(profile, game, 1).max(initial=0.0),
               _gain_vector(profile, game, 2).max(initial=0.0))


def _try_purify(profile: StrategyProfile, game: BimatrixGame, tol: float):
    """Snap near-zero probabilities away and keep the result only if it is a
    verified equilibrium; None otherwise.

    The advantage map approaches pure equilibria only harmonically (the
    gains shrink with the vanishing probabilities), so support
    identification plus verification is what actually reaches tight
    tolerances in finite time.
    """
    for threshold in (1e-12, 1e-9, 1e-6, 1e-3, 3e-2):
        x = np.where(profile.x < threshold, 0.0, profile.x)
        y = np.where(profile.y < threshold, 0.0, profile.y)
        if x.sum() == 0.0 or y.sum() == 0.0:
            continue
        if np.array_equal(x, profile.x) and np.array_equal(y, profile.y):
            continue
        candidate = StrategyProfile(x / x.sum(), y / y.sum())
        if max_gain(candidate, game) < tol and all(
                best_response_check(candidate, game, tol=tol)):
            return candidate
    return None


def find_equilibrium(game: BimatrixGame, tol: float = 1e-6,
                     max_iter: int = 100_000, damping: float = 1.0,
                     initial: StrategyProfile | None = None):
    """Damped advantage-map iteration from the uniform profile.

    Returns (profile, status) with status one of "converged", "cycle",
    "max_iter". A revisited profile (within 1e-10) is reported as a cycle;
    the map is not a contraction in general, so non-convergence is a
    status, not an error. Every 50 iterations the current profile is
    offered a support purification (see _try_purify).
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    profile = initial if initial is not None else StrategyProfile.uniform(game.shape)
    seen = set()
    for iteration in range(max_iter):
        if max_gain(profile, game) < tol:
            return profile, "converged"
        if iteration % 50 == 0 and iteration > 0:
            purified = _try_purify(profile, game, tol)
            if purified is not None:
                return purified, "converged"
        key = tuple(np.round(np.concatenate([profile.x, profile.y]) / 1e-10))
        if key in seen:
            return profile, "cycle"
        seen.add(key)
        stepped = advantage_step(profile, game)
        x = (1.0 - damping) * profile.x + damping * stepped.x
        y = (1.0 - damping) * profile.y + damping * stepped.y
        profile = StrategyProfile(x / x.sum(), y / y.sum())
    purified = _try_purify(profile, game, tol)
    if purified is not None:
        return purified, "converged"
    return profile, "max_iter"


def best_response_check(profile: StrategyProfile, game: BimatrixGame,
                        tol: float = 1e-8):
    """True per player iff every supported action attains the maximal payoff."""
    result = []
    for player, strat in ((1, profile.x), (2, profile.y)):
        payoffs = pure_payoffs(profile, game, player)
        best = payoffs.max()
        support = strat > tol
        result.append(bool(np.all(payoffs[support] >= best - tol)))
    return tuple(result)


@dataclass(frozen=True)
class EnumerationResult:
    equilibria: list
    degenerate: bool


def _solve_support(game: BimatrixGame, rows, cols, tol: float):
    """Solve the indifference system for one support pair; None if invalid."""
    m, n = game.shape
    a, b = game.payoff_a, game.payoff_b
    rows = list(rows)
    cols = list(cols)

    def solve_side(payoff_rows, size):
        # unknowns: probabilities on the support plus the common payoff v
        k = payoff_rows.shape[0]
        lhs = np.zeros((k + 1, len(payoff_rows[0]) + 1))
        lhs[:k, :-1] = payoff_rows
        lhs[:k, -1] = -1.0
        lhs[k, :-1] = 1.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        sol, residual, rank, _ = np.linalg.lstsq(lhs, rhs, rcond=None)
        fit = float(np.linalg.norm(lhs @ sol - rhs))
        deficient = rank < min(lhs.shape)
        return sol[:-1], sol[-1], fit, deficient

    # y supported on cols must equalize player 1's supported rows
    y_sup, v1, fit1, def1 = solve_side(a[np.ix_(rows, cols)], len(cols))
    # x supported on rows must equalize player 2's supported cols
    x_sup, v2, fit2, def2 = solve_side(b[np.ix_(rows, cols)].T, len(rows))
    if fit1 > tol or fit2 > tol:
        return None
    if y_sup.min() < -tol or x_sup.min() < -tol:
        return None
    x = np.zeros(m)
    y = np.zeros(n)
    x[rows] = np.clip(x_sup, 0.0, None)
    y[cols] = np.clip(y_sup, 0.0, None)
    x /= x.sum()
    y /= y.sum()
    profile = StrategyProfile(x, y)
    if not all(best_response_check(profile, game, tol=1e-7)):
        return None
    return profile, (def1 or def2)


def enumerate_equilibria_small(game: BimatrixGame,
                               tol: float = 1e-8) -> EnumerationResult:
    """Support enumeration for games up to 3x3; the oracle behind the tests.

    Returns every equilibrium found over all support pairs, deduplicated.
    Rank-deficient indifference systems with valid solutions mark the game
    degenerate and contribute representative vertices.
    """
    m, n = game.shape
    if m > 3 or n > 3:
        raise ValueError("support enumeration is limited to games up to 3x3")
    found = []
    keys = set()
    degenerate = False
    for r_size in range(1, m + 1):
        for c_size in range(1, n + 1):
            for rows in itertools.combinations(range(m), r_size):
                for cols in itertools.combinations(range(n), c_size):
                    solved = _solve_support(game, rows, cols, tol)
                    if solved is None:
                        continue
                    profile, deficient = solved
                    degenerate = degenerate or deficient
                    key = tuple(np.round(
                        np.concatenate([profile.x, profile.y]) / 1e-7))
                    if key not in keys:
                        keys.add(key)
                        found.append(profile)
    return EnumerationResult(equilibria=found, degenerate=degenerate)


def load_game(path) -> BimatrixGame:
    """Plain-text format: rows of whitespace-separated reals, blank line between A and B."""
    with open(path) as fh:
        text = fh.read()
    blocks = [blk for blk in text.replace("\r\n", "\n").split("\n\n") if blk.strip()]
    if len(blocks) != 2:
        raise ValueError(
            f"expected two matrices separated by a blank line, found {len(blocks)}")

    def parse(block):
        rows = [[float(tok) for tok in line.split()]
                for line in block.strip().splitlines() if line.strip()]
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError("ragged matrix rows in game file")
        return np.array(rows)

    return BimatrixGame(parse(blocks[0]), parse(blocks[1]))
