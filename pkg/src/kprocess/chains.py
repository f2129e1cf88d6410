"""Finite approximating chains and the REM-like trap model on the complete graph.

These are simulated the textbook way, hold then jump, independently of the
superposed-clock construction in :mod:`kprocess.kproc`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import TrapDisorder, WeightEnv
from .errors import ParameterError
from .kproc import ClockRealization
from .paths import INF, Trajectory, build_trajectory, inverse_label, sample_at


@dataclass(frozen=True)
class FiniteChainSpec:
    n: int
    env: WeightEnv
    c: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.env.n < self.n:
            raise ParameterError(f"environment prefix {self.env.n} does not cover 1..{self.n}")
        if not self.c >= 0.0:
            raise ParameterError("c must be >= 0")


class ChainSource:
    """Hold-then-jump source for a chain on {1..n} (and inf when c > 0).

    With ``c == 0`` every row is one visit: a uniform state (possibly the
    current one again) held for ``weights[x] * Exp(1)``.  With ``c > 0``
    a row is a visit to inf of mean ``c / n`` followed by a uniform state.
    ``start`` is a state, ``INF`` or ``"uniform"``.
    """

    def __init__(self, weights: np.ndarray, c: float = 0.0, start=INF):
        self.w = np.asarray(weights, dtype=np.float64)
        self.n = self.w.size
        self.c = float(c)
        if start == "uniform":
            start = INF if self.c == 0.0 else "uniform"
        if start != INF and start != "uniform" and not 1 <= start <= self.n:
            raise ParameterError(f"start state {start} outside 1..{self.n}")
        self.start = start

    def _visits(self, rng, rows):
        x = rng.integers(1, self.n + 1, size=rows)
        return self.w[x - 1] * rng.exponential(size=rows), x

    def initial(self, rng, m):
        if self.start == INF:
            return None
        if self.start == "uniform":
            hold, x = self._visits(rng, m)
            return hold[:, None], x[:, None]
        x = np.full((m, 1), self.start, dtype=np.int64)
        return self.w[self.start - 1] * rng.exponential(size=(m, 1)), x

    def draw(self, rng, rows):
        hold, x = self._visits(rng, rows)
        if self.c == 0.0:
            return hold[:, None], x[:, None]
        at_inf = (self.c / self.n) * rng.exponential(size=rows)
        lengths = np.column_stack([at_inf, hold])
        labels = np.column_stack([np.full(rows, INF, dtype=np.int64), x])
        return lengths, labels


def simulate_finite_chain(spec: FiniteChainSpec, y: int, T: float, rng: np.random.Generator) -> Trajectory:
    """X_n^{c,y}: hold Exp(mean gamma(x)); jump uniformly (c = 0) or to inf (c > 0)."""
    if y != INF and not 1 <= y <= spec.n:
        raise ParameterError(f"start {y} outside 1..{spec.n}")
    source = ChainSource(spec.env.weights[: spec.n], spec.c, y)
    return build_trajectory(source, T, rng, y)


def trap_source(disorder: TrapDisorder, y="uniform") -> ChainSource:
    """Source for the rescaled trap model: holding means c_n * tau_i."""
    return ChainSource(disorder.c_n * disorder.tau, 0.0, y)


def simulate_trap_model(disorder: TrapDisorder, y, T_macro: float, rng: np.random.Generator) -> Trajectory:
    """Y_n(t / c_n) on [0, T_macro], started uniformly by default.

    The chain is run in microscopic time (means tau_i) and its clock is then
    multiplied by c_n.
    """
    if not T_macro > 0.0:
        raise ParameterError("T_macro must be positive")
    if y != "uniform" and not 1 <= y <= disorder.n:
        raise ParameterError(f"start {y} outside 1..{disorder.n}")
    micro = build_trajectory(ChainSource(disorder.tau, 0.0, y), T_macro / disorder.c_n, rng,
                             INF if y == "uniform" else y)
    lengths = micro.lengths * disorder.c_n
    start = int(micro.states[0]) if y == "uniform" else y
    return Trajectory.from_lengths(np.append(lengths[:-1], np.inf), micro.states, T_macro, start)


def sample_trap_states(disorder: TrapDisorder, macro_times, rng: np.random.Generator):
    """Vectorized point evaluation of the rescaled trap model from a uniform start."""
    return sample_at(trap_source(disorder), macro_times, rng)


def path_discrepancy(a: Trajectory, b: Trajectory, T: float, grid_step: float) -> float:
    """max over t in {0, h, 2h, ...} <= T of |1/a(t) - 1/b(t)|, TAIL read as inf.

    A uniform-grid sup: no time change is optimized, so this dominates a
    Skorohod-type distance up to the grid resolution.
    """
    if not grid_step > 0.0:
        raise ParameterError("grid_step must be positive")
    if a.horizon < T or b.horizon < T:
        raise ParameterError(f"both horizons must be >= {T}")
    grid = np.arange(int(np.floor(T / grid_step + 1e-9)) + 1) * grid_step
    grid = grid[grid <= T]
    return float(np.max(np.abs(inverse_label(a.states_at(grid)) - inverse_label(b.states_at(grid)))))


def coupled_chains(env: WeightEnv, n_list, T: float, rng: np.random.Generator, y: int = INF, c=None):
    """Finite chains X_n for every n in ``n_list`` driven by one clock realization."""
    n_list = [int(n) for n in n_list]
    clock = ClockRealization(max(n_list), rng)
    return {n: clock.trajectory(env, n, T, y, c) for n in n_list}
