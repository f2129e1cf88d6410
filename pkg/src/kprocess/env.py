"""Weight environments and trap-model disorder.

A :class:`WeightEnv` stores a finite, non-increasing prefix of the mean
holding times gamma(1) >= gamma(2) >= ... together with ``tail_mass``, the
(exact or expected) total weight of every state beyond the prefix.  All
constructors take an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightEnv:
    weights: np.ndarray
    tail_mass: float = 0.0
    c: float = 0.0
    alpha: float | None = None
    _cumsum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1:
            raise ParameterError("weights must be one-dimensional")
        if w.size and not np.all(np.isfinite(w)):
            raise ParameterError("weights must be finite")
        if w.size and w.min() <= 0.0:
            raise ParameterError("every stored weight must be positive")
        if w.size > 1 and np.any(np.diff(w) > 0.0):
            raise ParameterError("weights must be sorted non-increasing")
        tail = float(self.tail_mass)
        if not (math.isfinite(tail) and tail >= 0.0):
            raise ParameterError(f"tail_mass must be finite and >= 0, got {tail}")
        c = float(self.c)
        if not (math.isfinite(c) and c >= 0.0):
            raise ParameterError(f"c must be finite and >= 0, got {c}")
        alpha = self.alpha
        if alpha is not None:
            alpha = float(alpha)
            if not 0.0 < alpha < 1.0:
                raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "tail_mass", tail)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "_cumsum", _frozen(np.cumsum(w)))

    @property
    def n(self) -> int:
        """Length of the stored prefix."""
        return int(self.weights.size)

    @property
    def prefix_mass(self) -> float:
        return float(self._cumsum[-1]) if self.n else 0.0

    @property
    def total_mass(self) -> float:
        return self.prefix_mass + self.tail_mass

    def mass_of_first(self, k: int) -> float:
        """Sum of the first ``k`` stored weights in O(1)."""
        if not 0 <= k <= self.n:
            raise ParameterError(f"k={k} outside 0..{self.n}")
        return float(self._cumsum[k - 1]) if k else 0.0

    def gamma(self, x: int) -> float:
        """Weight of the finite state ``x`` (1-based)."""
        if not 1 <= x <= self.n:
            raise ParameterError(f"state {x} is not in the stored prefix 1..{self.n}")
        return float(self.weights[x - 1])

    def with_c(self, c: float) -> "WeightEnv":
        return WeightEnv(self.weights, self.tail_mass, c, self.alpha)

    def __eq__(self, other):
        if not isinstance(other, WeightEnv):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.tail_mass == other.tail_mass
            and self.c == other.c
            and self.alpha == other.alpha
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "tail_mass": self.tail_mass,
            "weights": [float(w) for w in self.weights],
        }

    def to_json(self) -> str:
        # json emits repr(float), which round-trips doubles exactly
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "WeightEnv":
        try:
            return cls(
                weights=d["weights"],
                tail_mass=d["tail_mass"],
                c=d["c"],
                alpha=d.get("alpha"),
            )
        except KeyError as exc:
            raise ParameterError(f"environment JSON lacks field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "WeightEnv":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class TrapDisorder:
    """Sorted i.i.d. Pareto depths of the complete-graph trap model."""

    n: int
    tau: np.ndarray
    alpha: float
    c_n: float

    def __post_init__(self):
        tau = _frozen(self.tau)
        if self.n < 1 or tau.shape != (self.n,):
            raise ParameterError("tau must hold exactly n entries")
        if tau.min() <= 0.0 or (self.n > 1 and np.any(np.diff(tau) > 0.0)):
            raise ParameterError("tau must be positive and sorted non-increasing")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.c_n > 0.0:
            raise ParameterError("c_n must be positive")
        object.__setattr__(self, "tau", tau)

    def rescaled_env(self) -> WeightEnv:
        """Environment with weights c_n * tau, i.e. the macroscopic chain."""
        return WeightEnv(self.c_n * self.tau, 0.0, 0.0, self.alpha)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def make_geometric_env(ratio: float, prefix_len: int, c: float = 0.0) -> WeightEnv:
    """gamma(x) = ratio**x for x = 1..prefix_len with the exact geometric tail."""
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"ratio must lie in (0, 1), got {ratio}")
    if prefix_len < 1:
        raise ParameterError("prefix_len must be >= 1")
    weights = ratio ** np.arange(1, prefix_len + 1, dtype=np.float64)
    tail = ratio ** (prefix_len + 1) / (1.0 - ratio)
    return WeightEnv(weights, tail, c)


def sample_subordinator_env(
    alpha: float, epsilon: float, c: float, rng: np.random.Generator
) -> WeightEnv:
    """Jumps above ``epsilon`` of an alpha-stable subordinator on [0, 1].

    The jump count is Poisson with mean epsilon**-alpha and each jump is
    epsilon * U**(-1/alpha).  Jumps below epsilon are replaced by their mean
    total, alpha * epsilon**(1 - alpha) / (1 - alpha), stored as tail_mass.
    """
    _check_alpha(alpha)
    if not epsilon > 0.0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    count = rng.poisson(epsilon ** -alpha)
    u = 1.0 - rng.random(count)  # in (0, 1]
    w = np.sort(epsilon * u ** (-1.0 / alpha))[::-1]
    tail = alpha * epsilon ** (1.0 - alpha) / (1.0 - alpha)
    return WeightEnv(w, tail, c, alpha)


def scaling_constant(n: int, alpha: float) -> float:
    """c_n for Pareto depths with P(tau > t) = t**-alpha, t >= 1: n**(-1/alpha)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    _check_alpha(alpha)
    return float(n) ** (-1.0 / alpha)


def sample_trap_disorder(n: int, alpha: float, rng: np.random.Generator) -> TrapDisorder:
    if n < 1:
        raise ParameterError("n must be >= 1")
    _check_alpha(alpha)
    u = 1.0 - rng.random(n)
    tau = np.sort(u ** (-1.0 / alpha))[::-1]
    return TrapDisorder(n, tau, alpha, scaling_constant(n, alpha))


def truncate_env(env: WeightEnv, n: int) -> WeightEnv:
    """Keep the first ``n`` weights and move the rest into tail_mass."""
    if not 0 <= n <= env.n:
        raise ParameterError(f"cannot truncate a prefix of {env.n} to {n}")
    if n == env.n:
        return env
    dropped = math.fsum(env.weights[n:])
    return WeightEnv(env.weights[:n], env.tail_mass + dropped, env.c, env.alpha)


def parse_env_spec(spec: str, rng: np.random.Generator | None = None, c: float = 0.0) -> WeightEnv:
    """Build an environment from a compact string.

    ``geometric:RATIO:LEN`` or ``subordinator:ALPHA:EPSILON`` (needs ``rng``),
    or a path to a JSON file written by :meth:`WeightEnv.to_json`.
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "geometric":
            ratio, length = rest.split(":")
            return make_geometric_env(float(ratio), int(length), c)
        if kind == "subordinator":
            alpha, eps = rest.split(":")
            if rng is None:
                raise ParameterError("subordinator environments need an rng")
            return sample_subordinator_env(float(alpha), float(eps), c, rng)
    except ValueError as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed environment spec {spec!r}") from None
    if kind in ("geometric", "subordinator"):
        raise ParameterError(f"malformed environment spec {spec!r}")
    with open(spec) as fh:
        env = WeightEnv.from_json(fh.read())
    return env.with_c(c) if c else env
