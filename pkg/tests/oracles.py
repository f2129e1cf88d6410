"""Reference values computed without the package's transform code.

Finite K-processes (no tail) are ordinary Markov chains, so their
resolvents come from the generator by dense linear algebra.  State ``n``
(index n) stands for inf when ``c > 0``.
"""

import math

import numpy as np

# Frozen values (30-digit evaluation, rounded).  Arcsine closed form at alpha = 1/2:
#   Lambda(theta) = 1 - (2/pi) * arcsin(sqrt(theta / (1 + theta)))
ARCSINE = {
    0.5: 0.60817344796939273,
    1.0: 0.5,
    2.0: 0.39182655203060727,
    10.0: 0.19498222904213665,
}
LAMBDA_HAT_HALF_AT_1 = 2.0 / math.pi  # 0.63661977236758134
DERIVATIVE_HALF_AT_1 = -1.0 / (2.0 * math.pi)


def arcsine_limit(theta):
    return 1.0 - 2.0 / math.pi * math.asin(math.sqrt(theta / (1.0 + theta)))


def generator(weights, c=0.0):
    """Q for the chain that holds Exp(mean w_x) then jumps (uniformly, or to inf if c > 0)."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    if c == 0.0:
        q = np.ones((n, n)) / (n * w[:, None])
        np.fill_diagonal(q, 0.0)
        np.fill_diagonal(q, -q.sum(1))
        return q
    q = np.zeros((n + 1, n + 1))
    q[:n, n] = 1.0 / w
    q[n, :n] = 1.0 / c  # n clocks of rate 1/c each: mean holding c/n
    np.fill_diagonal(q, -q.sum(1))
    return q


def start_from_inf(weights, c=0.0):
    n = len(weights)
    if c == 0.0:
        return np.full(n, 1.0 / n)  # the first event from inf is uniform
    p = np.zeros(n + 1)
    p[n] = 1.0
    return p


def resolvent_law(weights, lam, c=0.0, start=None):
    """lam * int exp(-lam s) P(X(s) = .) ds as a vector."""
    q = generator(weights, c)
    p0 = start_from_inf(weights, c) if start is None else start
    return lam * np.linalg.solve((lam * np.eye(q.shape[0]) - q).T, p0)


def law_at(weights, s, c=0.0):
    from scipy.linalg import expm

    q = generator(weights, c)
    return start_from_inf(weights, c) @ expm(q * s)


def hitting_transform(weights, x, lam, c=0.0):
    """E_inf exp(-lam tau_x) by first-step analysis."""
    q = generator(weights, c)
    k = q.shape[0]
    rest = [i for i in range(k) if i != x - 1]
    qr = q[np.ix_(rest, rest)]
    to_x = q[rest, x - 1]
    h = np.linalg.solve(lam * np.eye(len(rest)) - qr, to_x)
    full = np.ones(k)
    full[rest] = h
    p0 = start_from_inf(weights, c)
    return float(p0 @ full)


def entrance_law(weights, A, lam, c=0.0):
    """Vector over A of E_inf[exp(-lam tau_A); X(tau_A) = a]."""
    q = generator(weights, c)
    k = q.shape[0]
    a_idx = [a - 1 for a in A]
    rest = [i for i in range(k) if i not in a_idx]
    p0 = start_from_inf(weights, c)
    if not rest:
        return p0[a_idx]
    m = np.linalg.solve(lam * np.eye(len(rest)) - q[np.ix_(rest, rest)], q[np.ix_(rest, a_idx)])
    return p0[a_idx] + p0[rest] @ m


def no_jump_transform(weights, lam, mu, c=0.0):
    """Double transform of P(no jump on [s, s + t]); self-jumps count as jumps."""
    w = np.asarray(weights, dtype=float)
    g = resolvent_law(w, lam, c)[: w.size]
    return float(np.sum(g * mu * w / (1.0 + mu * w)))


def beta_tail_reference(alpha, theta):
    """Lambda by the regularized incomplete beta function."""
    from scipy.special import betaincc

    return float(betaincc(1.0 - alpha, alpha, theta / (1.0 + theta)))


def z_density_reference(alpha, z):
    """Same density through Kummer's function."""
    from scipy.special import gamma, hyp1f1

    return float(
        math.sin(math.pi * alpha) / (math.pi * gamma(alpha + 1.0))
        * z ** (alpha - 1.0) * math.exp(-z) * hyp1f1(alpha, alpha + 1.0, z)
    )
