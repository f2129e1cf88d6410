"""Monte Carlo estimators tying the simulators to the closed forms.

Every estimator takes ``replicas``, a master ``seed`` and ``jobs``; see
:mod:`kprocess.parallel` for how replicas map to random streams.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import analytics
from .chains import coupled_chains, path_discrepancy, trap_source
from .env import TrapDisorder, WeightEnv, sample_subordinator_env, sample_trap_disorder
from .errors import ParameterError
from .kproc import KSource, sample_clock, sample_entrance, sample_hitting_time
from .parallel import run_blocks, stream
from .paths import INF, TAIL, sample_at


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    replicas: int

    @classmethod
    def from_samples(cls, samples) -> "Estimate":
        x = np.asarray(samples, dtype=np.float64)
        if x.size < 2:
            raise ParameterError("an estimate needs at least two replicas")
        return cls(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size)), int(x.size))

    def z_score(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.value == target else math.inf
        return (self.value - target) / self.std_error

    def agrees(self, target: float, k: float = 3.0) -> bool:
        return abs(self.z_score(target)) <= k


KINDS = ("mc_lambda_t", "mc_phi1", "mc_phi2", "closed_form")


@dataclass
class AgingCurve:
    theta_grid: np.ndarray
    values: list
    kind: str
    t: float | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=np.float64)
        if self.kind not in KINDS:
            raise ParameterError(f"unknown curve kind {self.kind!r}")
        if len(self.values) != self.theta_grid.size:
            raise ParameterError("grid and values differ in length")

    def point_values(self) -> np.ndarray:
        return np.array([v.value if isinstance(v, Estimate) else float(v) for v in self.values])

    def rows(self):
        for th, v in zip(self.theta_grid, self.values):
            if isinstance(v, Estimate):
                yield float(th), v.value, v.std_error, v.replicas
            else:
                yield float(th), float(v)

    def to_csv(self) -> str:
        out = io.StringIO()
        if self.kind == "closed_form":
            out.write("theta,value\n")
            for th, v in self.rows():
                out.write(f"{th:.17g},{v:.17g}\n")
        else:
            out.write("theta,estimate,se,replicas\n")
            for th, v, se, r in self.rows():
                out.write(f"{th:.17g},{v:.17g},{se:.17g},{r}\n")
        return out.getvalue()

    def to_records(self) -> list:
        if self.kind == "closed_form":
            return [{"theta": th, "value": v} for th, v in self.rows()]
        return [{"theta": th, "estimate": v, "se": se, "replicas": r} for th, v, se, r in self.rows()]


def _grid(theta_grid) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta_grid, dtype=np.float64))
    if th.size == 0 or th.min() < 0.0 or np.any(np.diff(th) <= 0.0):
        raise ParameterError("theta grid must be non-empty, non-negative and increasing")
    return th


def _positive(name, v):
    if not v > 0.0:
        raise ParameterError(f"{name} must be positive, got {v}")


# -- block workers (module level so they pickle) --------------------------------


def _lambda_t_block(rng, m, env, t, thetas):
    states, _, _ = sample_at(KSource(env, INF), np.full((m, 1), t), rng)
    x = states[:, 0]
    finite = x > 0
    out = np.zeros((m, thetas.size + 1))
    g = env.weights[x[finite] - 1]
    out[finite, : thetas.size] = np.exp(-np.outer(t / g, thetas))
    out[:, -1] = x == TAIL
    return out


def _phi_block(rng, m, source, t, thetas, phi):
    # thetas[0] == 0, so column 0 is the segment covering time t itself
    targets = np.tile(t * (1.0 + thetas), (m, 1))
    states, _, hi = sample_at(source, targets, rng)
    at_t = states[:, :1]
    if phi == 1:
        hit = (at_t > 0) & (hi[:, :1] > targets)
    else:
        hit = (at_t > 0) & (states == at_t)
    return np.column_stack([hit.astype(np.float64), (at_t[:, 0] == TAIL).astype(np.float64)])


def _green_block(rng, m, env, lam):
    s = rng.exponential(1.0 / lam, size=m)
    states, _, _ = sample_at(KSource(env, INF), s[:, None], rng)
    return states[:, 0]


def _corr_block(rng, m, env, lam, mu):
    s = rng.exponential(1.0 / lam, size=m)
    t = rng.exponential(1.0 / mu, size=m)
    states, _, hi = sample_at(KSource(env, INF), s[:, None], rng)
    return ((states[:, 0] > 0) & (hi[:, 0] > s + t)).astype(np.float64)


def _entrance_block(rng, m, env, members):
    state, when = sample_entrance(env, members, rng, size=m)
    return np.column_stack([state.astype(np.float64), when])


def _stationary_block(rng, m, env, members):
    w = env.weights[np.asarray(members) - 1]
    pick = rng.choice(len(members), size=m, p=w / w.sum())
    return np.column_stack([np.asarray(members, dtype=np.float64)[pick], np.zeros(m)])


def _hitting_block(rng, m, env, x):
    return sample_hitting_time(env, x, rng, size=m)


def _omega_block(rng, m, env, i, j):
    s = rng.gamma(j, size=m)
    return sample_clock(env, s, rng, exclude=(i,) if i else (), c=0.0)


def _converge_block(rng, m, env, n_list, T, grid_step, y):
    ref = env.n
    out = np.empty((m, len(n_list)))
    for r in range(m):
        paths = coupled_chains(env, sorted(set(n_list) | {ref}), T, rng, y)
        for k, n in enumerate(n_list):
            out[r, k] = path_discrepancy(paths[n], paths[ref], T, grid_step)
    return out


# -- estimators ------------------------------------------------------------------


def estimate_lambda_t(env: WeightEnv, t: float, theta_grid, replicas: int, seed: int, jobs: int = 1) -> AgingCurve:
    """E[exp(-theta t / gamma(X(t)))] from inf, one value per theta.

    Replicas that land in TAIL contribute 0; their frequency and the
    worst-case bias exp(-theta t / gamma(n)) * frequency go into ``info``.
    """
    if env.c != 0.0:
        raise ParameterError("aging estimates need c = 0")
    _positive("t", t)
    thetas = _grid(theta_grid)
    out = run_blocks(_lambda_t_block, replicas, seed, (env, t, thetas), key=(11,), jobs=jobs)
    tail_freq = float(out[:, -1].mean())
    values = []
    for k, th in enumerate(thetas):
        values.append(Estimate(1.0, 0.0, replicas) if th == 0.0 else Estimate.from_samples(out[:, k]))
    bias = tail_freq * np.exp(-thetas * t / env.weights[-1])
    return AgingCurve(thetas, values, "mc_lambda_t", t,
                      {"tail_frequency": tail_freq, "tail_bias_bound": bias.tolist()})


def estimate_phi(source, phi: int, t: float, theta_grid, replicas: int, seed: int, jobs: int = 1) -> AgingCurve:
    """Two-time correlation Phi_1 (no jump on [t, t(1+theta)]) or Phi_2 (X(t) = X(t(1+theta))).

    ``source`` is a WeightEnv (K-process from inf) or a TrapDisorder
    (rescaled trap model from a uniform start).
    """
    if phi not in (1, 2):
        raise ParameterError("phi must be 1 or 2")
    _positive("t", t)
    thetas = _grid(theta_grid)
    if isinstance(source, TrapDisorder):
        src = trap_source(source)
    elif isinstance(source, WeightEnv):
        src = KSource(source, INF)
    else:
        raise ParameterError("source must be a WeightEnv or a TrapDisorder")
    full = np.concatenate([[0.0], thetas]) if thetas[0] != 0.0 else thetas
    out = run_blocks(_phi_block, replicas, seed, (src, t, full, phi), key=(12, phi), jobs=jobs)
    if thetas[0] != 0.0:
        out = out[:, 1:]
    values = [Estimate(1.0, 0.0, replicas) if th == 0.0 else Estimate.from_samples(out[:, k])
              for k, th in enumerate(thetas)]
    return AgingCurve(thetas, values, f"mc_phi{phi}", t, {"tail_frequency": float(out[:, -1].mean())})


def estimate_green_mc(env: WeightEnv, lam: float, x, replicas: int, seed: int, jobs: int = 1):
    """Indicator of X(s) = x with s ~ Exp(lam), started at inf.

    ``x`` may be one state or a sequence (one shared set of replicas).
    Returns an Estimate or a list of them.
    """
    _positive("lambda", lam)
    states = run_blocks(_green_block, replicas, seed, (env, lam), key=(13,), jobs=jobs)
    xs = [x] if np.isscalar(x) else list(x)
    ests = [Estimate.from_samples(states == int(v)) for v in xs]
    return ests[0] if np.isscalar(x) else ests


def tail_frequency_green(env: WeightEnv, lam: float, replicas: int, seed: int, jobs: int = 1) -> float:
    states = run_blocks(_green_block, replicas, seed, (env, lam), key=(13,), jobs=jobs)
    return float(np.mean(states == TAIL))


def estimate_correlation_mc(env: WeightEnv, lam: float, mu: float, replicas: int, seed: int, jobs: int = 1) -> Estimate:
    _positive("lambda", lam)
    _positive("mu", mu)
    out = run_blocks(_corr_block, replicas, seed, (env, lam, mu), key=(14,), jobs=jobs)
    return Estimate.from_samples(out)


def entrance_counts(env: WeightEnv, A, replicas: int, seed: int, jobs: int = 1, alternative: str | None = None):
    """Histogram of entrance states over sorted ``A`` and the entrance times."""
    members = sorted(set(int(a) for a in A))
    fn = {None: _entrance_block, "stationary": _stationary_block}.get(alternative)
    if fn is None:
        raise ParameterError(f"unknown alternative {alternative!r}")
    out = run_blocks(fn, replicas, seed, (env, members), key=(15,), jobs=jobs)
    idx = np.searchsorted(members, out[:, 0].astype(np.int64))
    return members, np.bincount(idx, minlength=len(members)), out[:, 1]


def uniformity_test(env: WeightEnv, A, replicas: int, seed: int, jobs: int = 1, alternative: str | None = None):
    """Chi-square of entrance states against the uniform law on A.

    Returns ``(statistic, p_value, counts)``.  ``alternative="stationary"``
    replaces entrance sampling by draws proportional to gamma, which the
    test must reject.
    """
    if len(set(A)) < 2:
        raise ParameterError("the uniformity test needs |A| >= 2")
    _, counts, _ = entrance_counts(env, A, replicas, seed, jobs, alternative)
    res = stats.chisquare(counts)
    return float(res.statistic), float(res.pvalue), counts


def estimate_entrance_laplace(env: WeightEnv, A, lam: float, replicas: int, seed: int, jobs: int = 1) -> Estimate:
    """E_inf exp(-lam tau_A); equals |A| times analytics.entrance_laplace."""
    _, _, when = entrance_counts(env, A, replicas, seed, jobs)
    return Estimate.from_samples(np.exp(-lam * when))


def estimate_hitting_laplace(env: WeightEnv, x: int, lams, replicas: int, seed: int, jobs: int = 1):
    """E_inf exp(-lam tau^{x}) for each lam, from one shared set of hitting times."""
    tau = run_blocks(_hitting_block, replicas, seed, (env, x), key=(16,), jobs=jobs)
    return [Estimate.from_samples(np.exp(-lam * tau)) for lam in lams]


def estimate_omega(env: WeightEnv, i: int, j: int, r: float, replicas: int, seed: int, jobs: int = 1) -> Estimate:
    """E exp(-r Gamma^{(i)}(S_j)) with S_j the j-th event of a rate-one clock."""
    g = run_blocks(_omega_block, replicas, seed, (env, i, j), key=(17,), jobs=jobs)
    return Estimate.from_samples(np.exp(-r * g))


def convergence_study(env: WeightEnv, c: float, n_list, T: float, replicas: int, seed: int,
                      grid_step: float | None = None, jobs: int = 1, y: int = INF):
    """Median grid discrepancy between X_n and the finest chain X_N, N = env.n.

    All chains of a replica share one clock realization.  Returns a list
    of ``(n, median)`` rows.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ParameterError("n_list must be increasing")
    if n_list[0] < 1 or n_list[-1] > env.n:
        raise ParameterError(f"n_list must lie within the prefix 1..{env.n}")
    _positive("T", T)
    step = T / 1000.0 if grid_step is None else grid_step
    disc = run_blocks(_converge_block, replicas, seed, (env.with_c(c), n_list, T, step, y),
                      key=(18,), jobs=jobs, block_size=64)
    return [(n, float(np.median(disc[:, k]))) for k, n in enumerate(n_list)]


def lambda_t_over_disorder(alpha: float, epsilon: float, t: float, theta_grid, draws: int,
                           replicas: int, seed: int, jobs: int = 1):
    """estimate_lambda_t on ``draws`` independent subordinator environments."""
    curves = []
    for d in range(draws):
        env = sample_subordinator_env(alpha, epsilon, 0.0, stream(seed, 21, d))
        curves.append(estimate_lambda_t(env, t, theta_grid, replicas, seed + 1 + d, jobs))
    return curves


def phi_over_trap_disorder(n: int, alpha: float, t: float, theta_grid, draws: int,
                           replicas: int, seed: int, phi: int = 1, jobs: int = 1):
    """estimate_phi on ``draws`` independent trap disorders of size ``n``."""
    curves = []
    for d in range(draws):
        disorder = sample_trap_disorder(n, alpha, stream(seed, 22, d))
        curves.append(estimate_phi(disorder, phi, t, theta_grid, replicas, seed + 1 + d, jobs))
    return curves


def convergence_csv(rows) -> str:
    return "n,median_disc\n" + "".join(f"{n},{m:.17g}\n" for n, m in rows)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def run_manifest(seed: int, config: dict, wall_time: float, tail_frequencies=None) -> dict:
    return {
        "seed": int(seed),
        "config": config,
        "config_hash": config_hash(config),
        "wall_time": float(wall_time),
        "tail_frequencies": tail_frequencies or {},
    }
