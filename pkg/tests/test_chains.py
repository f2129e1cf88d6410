import math

import numpy as np
import pytest
from scipy import stats

import oracles
from kprocess import INF, ParameterError, Trajectory, WeightEnv
from kprocess.chains import (
    ChainSource,
    FiniteChainSpec,
    coupled_chains,
    path_discrepancy,
    sample_trap_states,
    simulate_finite_chain,
    simulate_trap_model,
)
from kprocess.env import make_geometric_env, sample_subordinator_env, sample_trap_disorder
from kprocess.paths import sample_at


def rng(seed=0):
    return np.random.default_rng(seed)


def const(x, T):
    return Trajectory.from_lengths(np.array([T]), np.array([x]), T, x)


def test_single_state_chain_constant():
    spec = FiniteChainSpec(1, make_geometric_env(0.5, 4))
    tr = simulate_finite_chain(spec, 1, 50.0, rng(1))
    assert set(tr.states.tolist()) == {1}


def test_two_state_occupation():
    env = WeightEnv(np.array([2.0, 0.5]), 0.0)
    tr = simulate_finite_chain(FiniteChainSpec(2, env), 1, 4e4, rng(2))
    assert tr.time_in(1) / 4e4 == pytest.approx(0.8, abs=0.01)


def test_c_positive_from_inf():
    env = WeightEnv(np.array([1.0, 0.5, 0.25]), 0.0)
    tr = simulate_finite_chain(FiniteChainSpec(3, env, c=1.5), INF, 3e3, rng(3))
    inf_len = tr.lengths[:-1][tr.states[:-1] == INF]
    assert inf_len.mean() == pytest.approx(0.5, rel=0.05)
    nxt = tr.states[1:][tr.states[:-1] == INF]
    assert stats.chisquare(np.bincount(nxt, minlength=4)[1:]).pvalue > 1e-3


@pytest.mark.parametrize("c", [0.0, 2.0])
def test_finite_chain_law_matches_generator(c):
    w = np.array([1.0, 0.4, 0.1])
    src = ChainSource(w, c, INF)
    states, _, _ = sample_at(src, np.full((100000, 1), 0.8), rng(4))
    law = oracles.law_at(w, 0.8, c)
    for x in (1, 2, 3):
        p = law[x - 1]
        assert abs(np.mean(states[:, 0] == x) - p) < 4 * math.sqrt(p * (1 - p) / 1e5)


def test_spec_validation():
    env = make_geometric_env(0.5, 3)
    with pytest.raises(ParameterError):
        FiniteChainSpec(4, env)
    with pytest.raises(ParameterError):
        FiniteChainSpec(0, env)
    with pytest.raises(ParameterError):
        simulate_finite_chain(FiniteChainSpec(2, env), 3, 1.0, rng())


def test_trap_single_site_constant():
    d = sample_trap_disorder(1, 0.5, rng(5))
    tr = simulate_trap_model(d, "uniform", 10.0, rng(6))
    assert set(tr.states.tolist()) == {1}
    assert tr.ends[-1] == 10.0


def test_trap_holding_macro_time():
    d = sample_trap_disorder(3, 0.5, rng(7))
    tr = simulate_trap_model(d, 1, 2e3 * d.c_n * d.tau.sum(), rng(8))
    holds = tr.lengths[:-1][tr.states[:-1] == 2]
    assert stats.kstest(holds, "expon", args=(0, d.c_n * d.tau[1])).pvalue > 1e-3


def test_deepest_trap_frechet():
    n, alpha = 2000, 0.5
    m = np.array([sample_trap_disorder(n, alpha, rng(s)).tau[0] * n ** (-1 / alpha) for s in range(3000)])
    assert stats.kstest(m, stats.invweibull(alpha).cdf).pvalue > 1e-3


def test_trap_matches_finite_chain():
    d = sample_trap_disorder(5, 0.5, rng(9))
    env = d.rescaled_env()
    times = np.tile([0.1, 1.0], (60000, 1))
    trap, _, _ = sample_trap_states(d, times, rng(10))
    chain, _, _ = sample_at(ChainSource(env.weights, 0.0, INF), times, rng(11))
    for k in range(2):
        table = np.array([np.bincount(trap[:, k], minlength=6)[1:], np.bincount(chain[:, k], minlength=6)[1:]])
        table = table[:, table.sum(0) > 0]
        assert stats.chi2_contingency(table).pvalue > 1e-3


def test_trap_model_path_rescaling():
    d = sample_trap_disorder(4, 0.5, rng(12))
    tr = simulate_trap_model(d, "uniform", 0.5, rng(13))
    assert tr.ends[-1] == 0.5
    assert tr.states[0] in (1, 2, 3, 4)


def test_discrepancy_examples():
    a = const(1, 2.0)
    assert path_discrepancy(a, a, 2.0, 0.1) == 0.0
    assert path_discrepancy(a, const(2, 2.0), 2.0, 0.1) == 0.5
    assert path_discrepancy(const(4, 2.0), const(INF, 2.0), 2.0, 0.1) == 0.25
    with pytest.raises(ParameterError):
        path_discrepancy(a, a, 3.0, 0.1)
    with pytest.raises(ParameterError):
        path_discrepancy(a, a, 1.0, 0.0)


def test_coupled_chains_reference_identity():
    env = sample_subordinator_env(0.5, 1e-4, 0.0, rng(14))
    paths = coupled_chains(env, [10, env.n], 1.0, rng(15))
    assert path_discrepancy(paths[env.n], paths[env.n], 1.0, 1e-3) == 0.0
    assert set(paths) == {10, env.n}
    assert np.all(paths[10].states <= 10)


def test_coupled_discrepancy_shrinks():
    env = sample_subordinator_env(0.5, 1e-6, 0.0, rng(16))
    small, large = [], []
    for s in range(40):
        p = coupled_chains(env, [10, 300, env.n], 1.0, rng(100 + s))
        small.append(path_discrepancy(p[10], p[env.n], 1.0, 1e-3))
        large.append(path_discrepancy(p[300], p[env.n], 1.0, 1e-3))
    assert np.median(large) < np.median(small)


def test_coupled_chains_with_c():
    env = make_geometric_env(0.5, 8, c=0.5)
    paths = coupled_chains(env, [3, 8], 2.0, rng(17))
    tr = paths[3]
    finite = np.flatnonzero(tr.states[:-1] > 0)
    assert np.all(tr.states[finite + 1] == INF)
