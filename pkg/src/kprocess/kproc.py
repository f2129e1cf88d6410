"""Exact-construction simulator of the K(gamma, c)-process.

Internal time runs a rate-one Poisson clock per state.  Over the stored
prefix of ``n`` weights these clocks superpose into one rate-``n`` stream
whose events carry uniform labels.  An event labelled ``x`` at internal
time ``sigma`` occupies real time ``gamma(x) * Exp(1)``; internal time
itself is charged ``c`` per unit to the state at infinity and ``tail_mass``
per unit to the unresolved TAIL.
"""

from __future__ import annotations

import math

import numpy as np

from .env import WeightEnv
from .errors import BudgetError, ParameterError, RangeError
from .paths import INF, TAIL, Trajectory, accumulate, build_trajectory, sample_at

__all__ = [
    "ClockRealization",
    "KSource",
    "no_jump_indicator",
    "sample_clock",
    "sample_entrance",
    "sample_hitting_time",
    "simulate_trajectory",
    "state_at",
]


def _require_prefix(env: WeightEnv):
    if env.n < 1:
        raise ParameterError("the environment stores no weights")


def _check_start(env: WeightEnv, y: int):
    if y != INF and not 1 <= y <= env.n:
        raise ParameterError(f"start state {y} has no stored weight (prefix 1..{env.n})")


class KSource:
    """Segment source for the superposed-clock construction (see ``paths``).

    Each drawn row is one internal event: an inf segment ``c * gap``, a TAIL
    segment ``tail_mass * gap`` and the labelled holding ``gamma(x) * mark``.
    Columns that are identically zero are left out.
    """

    def __init__(self, env: WeightEnv, y: int = INF):
        _require_prefix(env)
        _check_start(env, y)
        self.env = env
        self.y = y
        self._rate_cols = [(env.c, INF)] if env.c > 0.0 else []
        if env.tail_mass > 0.0:
            self._rate_cols.append((env.tail_mass, TAIL))

    def initial(self, rng, m):
        if self.y == INF:
            return None
        lengths = self.env.gamma(self.y) * rng.exponential(size=(m, 1))
        return lengths, np.full((m, 1), self.y, dtype=np.int64)

    def draw(self, rng, rows):
        env = self.env
        gap = rng.exponential(1.0 / env.n, size=rows)
        lab = rng.integers(1, env.n + 1, size=rows)
        mark = rng.exponential(size=rows)
        lengths = np.empty((rows, len(self._rate_cols) + 1))
        labels = np.empty((rows, len(self._rate_cols) + 1), dtype=np.int64)
        for j, (rate, code) in enumerate(self._rate_cols):
            lengths[:, j] = rate * gap
            labels[:, j] = code
        lengths[:, -1] = env.weights[lab - 1] * mark
        labels[:, -1] = lab
        return lengths, labels


def simulate_trajectory(
    env: WeightEnv,
    y: int,
    T: float,
    rng: np.random.Generator,
    tail_budget: float = math.inf,
) -> Trajectory:
    """One K(gamma, c) path from ``y`` on ``[0, T]``.

    Raises :class:`BudgetError` when the time charged to TAIL exceeds
    ``tail_budget``.
    """
    if not T > 0.0:
        raise ParameterError(f"horizon must be positive, got {T}")
    if not tail_budget > 0.0:
        raise ParameterError("tail_budget must be positive")
    traj = build_trajectory(KSource(env, y), T, rng, y)
    tail = traj.tail_time
    if tail > tail_budget:
        raise BudgetError(tail, tail_budget)
    return traj


def state_at(traj: Trajectory, t: float) -> int:
    """Label at time ``t``; on a boundary the later segment wins."""
    return traj.state_at(t)


def no_jump_indicator(traj: Trajectory, s: float, t: float) -> int:
    """1 if the path stays in one finite state throughout ``[s, s + t]``.

    Segments labelled TAIL or inf never count as constant: TAIL hides an
    unknown succession of deep states and inf is never a holding state of
    the limit process.
    """
    if t < 0.0 or s < 0.0 or s + t > traj.horizon:
        raise RangeError(f"window [{s}, {s + t}] outside [0, {traj.horizon}]")
    if t == 0.0:
        return 1
    i = traj.segment_index(s)
    if traj.states[i] < 1:
        return 0
    end = traj.ends[i]
    return int(end > s + t or end >= traj.horizon)


def sample_clock(env: WeightEnv, s, rng: np.random.Generator, exclude=(), c: float | None = None):
    """Real time spent up to internal times ``s`` outside the states in ``exclude``.

    Each stored state ``y`` contributes ``gamma(y) * Gamma(Poisson(s), 1)``;
    inf and the tail contribute ``(c + tail_mass) * s``.  ``c`` defaults to
    ``env.c``.
    """
    s = np.asarray(s, dtype=np.float64)
    flat = s.ravel()
    keep = np.ones(env.n, dtype=bool)
    for x in exclude:
        keep[x - 1] = False
    w = env.weights[keep]
    total = np.zeros(flat.size)
    if w.size:
        step = max(1, (1 << 21) // w.size)
        for lo in range(0, flat.size, step):
            ss = flat[lo : lo + step]
            counts = rng.poisson(np.broadcast_to(ss[:, None], (ss.size, w.size)))
            total[lo : lo + step] = rng.gamma(counts) @ w
    rate = (env.c if c is None else c) + env.tail_mass
    total += rate * flat
    return total.reshape(s.shape)


def sample_hitting_time(env: WeightEnv, x: int, rng: np.random.Generator, size=None):
    """First passage time to state ``x`` from inf, drawn without a path.

    The passage happens at the first event of x's own clock, an Exp(1)
    internal time; everything the other clocks did before then is summed.
    """
    _require_prefix(env)
    if not 1 <= x <= env.n:
        raise ParameterError(f"target {x} is not in the stored prefix 1..{env.n}")
    s = rng.exponential(size=size)
    out = sample_clock(env, s, rng, exclude=(x,))
    return float(out) if size is None else out


def sample_entrance(env: WeightEnv, A, rng: np.random.Generator, size=None):
    """State and real time of the first entrance into ``A`` from inf.

    Steps the superposed clock event by event, charging every holding and
    every inf/TAIL increment that precedes the first event labelled in A.
    """
    _require_prefix(env)
    members = sorted(set(int(a) for a in A))
    if not members:
        raise ParameterError("the target set must be non-empty")
    if members[0] < 1 or members[-1] > env.n:
        raise ParameterError(f"target set must lie in the stored prefix 1..{env.n}")
    in_a = np.zeros(env.n + 1, dtype=bool)
    in_a[members] = True
    m = 1 if size is None else int(size)
    rate = env.c + env.tail_mass
    when = np.zeros(m)
    state = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    while active.size:
        gap = rng.exponential(1.0 / env.n, size=active.size)
        lab = rng.integers(1, env.n + 1, size=active.size)
        when[active] += rate * gap
        hit = in_a[lab]
        state[active[hit]] = lab[hit]
        miss = ~hit
        active = active[miss]
        when[active] += env.weights[lab[miss] - 1] * rng.exponential(size=active.size)
    if size is None:
        return int(state[0]), float(when[0])
    return state, when


def sample_states(env: WeightEnv, times, rng: np.random.Generator, y: int = INF):
    """Vectorized point evaluation: labels and covering segments at ``times``.

    ``times`` has shape ``(m, k)`` (one independent path per row, rows
    non-decreasing).  See :func:`kprocess.paths.sample_at`.
    """
    return sample_at(KSource(env, y), times, rng)


class ClockRealization:
    """Lazily realized rate-one clocks for the first ``n_max`` states.

    Stores the superposed event stream (internal times, labels, unit
    exponential marks) and ``T0``.  Every finite chain built from one
    realization uses the same clocks, so ``Gamma_n(s) <= Gamma_m(s)`` for
    ``n <= m`` holds path by path.
    """

    def __init__(self, n_max: int, rng: np.random.Generator):
        if n_max < 1:
            raise ParameterError("n_max must be >= 1")
        self.n_max = int(n_max)
        self.rng = rng
        self.t0 = float(rng.exponential())
        self.sigma = np.empty(0)
        self.labels = np.empty(0, dtype=np.int64)
        self.marks = np.empty(0)

    def extend(self, count: int):
        rng = self.rng
        gaps = rng.exponential(1.0 / self.n_max, size=count)
        origin = self.sigma[-1] if self.sigma.size else 0.0
        self.sigma = np.concatenate([self.sigma, accumulate(gaps, origin)])
        self.labels = np.concatenate([self.labels, rng.integers(1, self.n_max + 1, size=count)])
        self.marks = np.concatenate([self.marks, rng.exponential(size=count)])

    def _check(self, env, n, y):
        if not 1 <= n <= min(self.n_max, env.n):
            raise ParameterError(f"n={n} outside 1..{min(self.n_max, env.n)}")
        if y != INF and not 1 <= y <= n:
            raise ParameterError(f"start {y} outside 1..{n}")

    def gamma_n(self, env: WeightEnv, n: int, s, y: int = INF, c: float | None = None):
        """Gamma_n(s): real time elapsed by internal time ``s`` in the n-state chain."""
        self._check(env, n, y)
        c = env.c if c is None else c
        s = np.asarray(s, dtype=np.float64)
        if s.size and self.sigma.size and s.max() > self.sigma[-1]:
            raise ParameterError("internal time beyond the realized clock")
        mine = self.labels <= n
        contrib = np.where(mine, env.weights[np.minimum(self.labels, env.n) - 1] * self.marks, 0.0)
        running = accumulate(contrib)
        idx = np.searchsorted(self.sigma, s, side="right")
        base = env.gamma(y) * self.t0 if y != INF else 0.0
        before = np.where(idx > 0, running[np.maximum(idx, 1) - 1], 0.0)
        return base + before + c * s

    def trajectory(self, env: WeightEnv, n: int, T: float, y: int = INF, c: float | None = None) -> Trajectory:
        """The finite chain on {1..n} (plus inf when c > 0) driven by these clocks."""
        self._check(env, n, y)
        c = env.c if c is None else c
        w = env.weights
        base = w[y - 1] * self.t0 if y != INF else 0.0
        while True:
            mine = self.labels <= n
            sig = self.sigma[mine]
            hold = w[self.labels[mine] - 1] * self.marks[mine]
            reach = base + hold.sum() + (c * sig[-1] if sig.size else 0.0)
            if sig.size and reach >= T:
                break
            self.extend(max(1024, self.sigma.size))
        lengths = [np.array([base])] if base > 0.0 else []
        labels = [np.array([y])] if base > 0.0 else []
        if c > 0.0:
            inf_len = c * np.diff(sig, prepend=0.0)
            lengths.append(np.column_stack([inf_len, hold]).ravel())
            labels.append(np.column_stack([np.full(sig.size, INF), self.labels[mine]]).ravel())
        else:
            lengths.append(hold)
            labels.append(self.labels[mine])
        return Trajectory.from_lengths(np.concatenate(lengths), np.concatenate(labels), T, y)
