"""Closed forms and quadratures for K-process transforms and the aging limit.

Every infinite sum over states is evaluated as the stored prefix plus a
first-order tail term ``coefficient * tail_mass``: all summands have the form
h(gamma) with h(w) = h'(0) w + O(w^2) and every tail weight is below the
smallest stored one.  :func:`tail_residual_bound` gives the neglected
second-order amount.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .env import WeightEnv
from .errors import DomainError, ParameterError
from .paths import INF

_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=200)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _positive(name, value):
    if not value > 0.0:
        raise ParameterError(f"{name} must be positive, got {value}")


def _quad(f, a, b, **kw):
    opts = dict(_QUAD)
    opts.update(kw)
    return integrate.quad(f, a, b, **opts)[0]


# -- transforms of the K-process ------------------------------------------------


def holding_laplace(lam: float, gamma_x: float) -> float:
    """E_x exp(-lam * tau_x) for an Exp(mean gamma_x) holding time."""
    if lam < 0.0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    return 1.0 / (1.0 + lam * gamma_x)


def _ratio_sum(env: WeightEnv, lam: float, exclude=()) -> float:
    """sum over states not in ``exclude`` of lam*g/(1+lam*g), tail to first order."""
    lw = lam * env.weights
    terms = lw / (1.0 + lw)
    drop = [x - 1 for x in exclude if x != INF and 1 <= x <= env.n]
    if drop:
        terms = np.delete(terms, drop)
    return math.fsum(terms) + lam * env.tail_mass


def tail_residual_bound(env: WeightEnv, lam: float) -> float:
    """Upper bound on lam*tail_mass minus the exact tail of ``_ratio_sum``.

    For w <= gamma(n): lam*w - lam*w/(1+lam*w) <= lam**2 * w * gamma(n).
    """
    w_min = env.weights[-1] if env.n else 0.0
    return lam * lam * w_min * env.tail_mass


def _state(env: WeightEnv, x) -> int:
    x = INF if x in (INF, math.inf, "inf") else int(x)
    if x != INF and not 1 <= x <= env.n:
        raise ParameterError(f"state {x} is not in the stored prefix 1..{env.n}")
    return x


def _gamma(env: WeightEnv, x: int) -> float:
    return 0.0 if x == INF else float(env.weights[x - 1])


def entrance_laplace(env: WeightEnv, A, lam: float, from_y=INF) -> float:
    """Coefficient k with E_y[f(X(tau_A)) exp(-lam tau_A)] = k * sum_{x in A} f(x).

    From inf, k = 1 / (|A| + c*lam + S) with S the ratio sum over states
    outside A.  From a finite y outside A the first holding at y contributes
    the extra factor 1 / (1 + lam*gamma(y)).
    """
    _positive("lambda", lam)
    members = {_state(env, a) for a in A}
    if not members or INF in members:
        raise ParameterError("A must be a non-empty set of finite states")
    y = _state(env, from_y)
    if y in members:
        raise ParameterError(f"start state {y} lies in A")
    s = _ratio_sum(env, lam, exclude=members)
    k = 1.0 / (len(members) + env.c * lam + s)
    return k / (1.0 + lam * _gamma(env, y))


def hitting_laplace(env: WeightEnv, x, lam: float) -> float:
    """E_inf exp(-lam * tau^{x}) = 1 / (1 + c*lam + sum_{y != x} lam g_y/(1 + lam g_y))."""
    _positive("lambda", lam)
    x = _state(env, x)
    if x == INF:
        raise ParameterError("the target must be a finite state")
    return 1.0 / (1.0 + env.c * lam + _ratio_sum(env, lam, exclude=(x,)))


def green(env: WeightEnv, lam: float, x) -> float:
    """lam * int exp(-lam s) P_inf(X(s) = x) ds; x may be inf."""
    _positive("lambda", lam)
    x = _state(env, x)
    denom = env.c * lam + _ratio_sum(env, lam)
    if x == INF:
        return env.c * lam / denom
    g = lam * env.weights[x - 1]
    return (g / (1.0 + g)) / denom


def green_tail(env: WeightEnv, lam: float) -> float:
    """Green mass of all unstored states together, to first order in tail_mass.

    Prefix greens, this term and (c > 0) green(inf) add up to one.
    """
    _positive("lambda", lam)
    return lam * env.tail_mass / (env.c * lam + _ratio_sum(env, lam))


def green_pair(env: WeightEnv, lam: float, x, y) -> float:
    """lam * int exp(-lam s) P_y(X(s) = x) ds.

    Off the diagonal this is green(x) / (1 + lam*gamma(y)).  When x == y is
    finite the initial holding at y adds lam*gamma(y) / (1 + lam*gamma(y)).
    """
    x = _state(env, x)
    y = _state(env, y)
    gy = lam * _gamma(env, y)
    value = green(env, lam, x) / (1.0 + gy)
    if x == y and y != INF:
        value += gy / (1.0 + gy)
    return value


def correlation_laplace(env: WeightEnv, lam: float, mu: float) -> float:
    """Double Laplace transform of P_inf(no jump on [s, s + t]).

    The numerator's tail (of order lam*mu*sum gamma^2 over unstored states)
    is dropped; :func:`correlation_tail_bound` bounds it.
    """
    _positive("lambda", lam)
    _positive("mu", mu)
    lw = lam * env.weights
    mw = mu * env.weights
    num = math.fsum((lw / (1.0 + lw)) * (mw / (1.0 + mw)))
    return num / (env.c * lam + _ratio_sum(env, lam))


def correlation_tail_bound(env: WeightEnv, lam: float, mu: float) -> float:
    w_min = env.weights[-1] if env.n else 0.0
    return lam * mu * w_min * env.tail_mass / (env.c * lam + _ratio_sum(env, lam))


def omega_laplace(env: WeightEnv, i: int, j: int, r: float) -> float:
    """(1 + sum_{x != i} r g_x/(1 + r g_x))**-j; i = 0 excludes nothing."""
    if r < 0.0:
        raise ParameterError(f"r must be >= 0, got {r}")
    if j not in (1, 2):
        raise ParameterError(f"j must be 1 or 2, got {j}")
    if i != 0:
        _state(env, i)
    base = 1.0 / (1.0 + _ratio_sum(env, r, exclude=(i,) if i else ()))
    return base if j == 1 else base * base


# -- aging limit ---------------------------------------------------------------


def _beta_tail(alpha: float, a: float) -> float:
    """int_a^1 s^-alpha (1-s)^(alpha-1) ds with both endpoint singularities removed.

    On [a, 1/2] use s = v^(1/(1-alpha)); on [1/2, 1] use s = 1 - u^(1/alpha).
    Both leave bounded smooth integrands.
    """
    total = 0.0
    mid = 0.5
    if a < mid:
        p = 1.0 / (1.0 - alpha)
        total += _quad(lambda v: p * (1.0 - v ** p) ** (alpha - 1.0), a ** (1.0 - alpha), mid ** (1.0 - alpha))
    lo = max(a, mid)
    if lo < 1.0:
        q = 1.0 / alpha
        total += _quad(lambda u: q * (1.0 - u ** q) ** (-alpha), 0.0, (1.0 - lo) ** alpha)
    return total


def aging_limit(alpha: float, theta: float) -> float:
    """sin(pi alpha)/pi * int_{theta/(1+theta)}^1 s^-alpha (1-s)^(alpha-1) ds."""
    _check_alpha(alpha)
    if theta < 0.0:
        raise ParameterError(f"theta must be >= 0, got {theta}")
    if math.isinf(theta):
        return 0.0
    return math.sin(math.pi * alpha) / math.pi * _beta_tail(alpha, theta / (1.0 + theta))


def aging_limit_derivative(alpha: float, theta: float) -> float:
    _check_alpha(alpha)
    if theta <= 0.0:
        raise DomainError("the derivative of the aging limit diverges at theta = 0")
    return -math.sin(math.pi * alpha) / math.pi * theta ** -alpha / (1.0 + theta)


def gfun(a: float) -> float:
    """int_0^inf t^a e^-t dt = Gamma(a + 1)."""
    return math.gamma(a + 1.0)


def _stable_mean_ratio(alpha: float) -> float:
    # int_0^inf w/(1+w) w^(-1-alpha) dw = pi / sin(pi alpha)
    return math.pi / math.sin(math.pi * alpha)


def aging_hat(alpha: float, theta: float) -> float:
    """(1/G(alpha)) int_0^inf e^(-theta/w) w^-(1+alpha) dw / int_0^inf w^-alpha/(1+w) dw.

    The numerator is theta^-alpha * Gamma(alpha) after w = theta/u.  It
    diverges as theta -> 0, so theta = 0 is a domain error even though
    aging_hat - aging_tilde stays finite there.
    """
    _check_alpha(alpha)
    if theta <= 0.0:
        raise DomainError("aging_hat diverges at theta = 0")
    num = theta ** -alpha * math.gamma(alpha)
    return num / (gfun(alpha) * _stable_mean_ratio(alpha))


def aging_tilde(alpha: float, theta: float) -> float:
    """Second term of the aging limit.

    The inner w-integral is (1+theta-s)^-(1+alpha) * Gamma(1+alpha), which
    cancels G(alpha); what remains is a one-dimensional integral over s.
    """
    _check_alpha(alpha)
    if theta <= 0.0:
        raise DomainError("aging_tilde diverges at theta = 0")
    # substitute u = 1 + theta - s, then u = e^v, to spread the peak at s = 1
    top = 1.0 + theta

    def f(v):
        u = math.exp(v)
        return (top - u) ** alpha * u ** -alpha

    inner = _quad(f, math.log(theta), math.log(top))
    return inner / _stable_mean_ratio(alpha)


def general_aging_limit(alpha: float, theta: float, psi1, psi2) -> float:
    """psi1(theta) * Lambda(theta) - int_0^theta psi2(s, theta) Lambda'(s) ds.

    The s^-alpha singularity of Lambda' is removed by s = u^(1/(1-alpha)).
    """
    _check_alpha(alpha)
    if theta < 0.0:
        raise ParameterError(f"theta must be >= 0, got {theta}")
    head = psi1(theta) * aging_limit(alpha, theta)
    if theta == 0.0:
        return head
    p = 1.0 / (1.0 - alpha)
    k = math.sin(math.pi * alpha) / math.pi * p

    def f(u):
        s = u ** p
        return psi2(s, theta) / (1.0 + s)

    return head + k * _quad(f, 0.0, theta ** (1.0 - alpha), epsrel=1e-12)


def _z_kernel(alpha: float, z: float) -> float:
    """z_density(alpha, z) / z^(alpha-1); finite at z = 0."""
    # with x = 1 - s the inner integral is alpha * int_0^1 e^(-xz) (1-x)^(alpha-1) dx
    inner = alpha * integrate.quad(
        lambda x: math.exp(-x * z), 0.0, 1.0, weight="alg", wvar=(0.0, alpha - 1.0),
        epsabs=0.0, epsrel=1e-12, limit=200,
    )[0]
    return inner / (gfun(alpha) * _stable_mean_ratio(alpha))


def z_density(alpha: float, z: float) -> float:
    """Density of the limit of t / gamma(Y_t); its Laplace transform is the aging limit."""
    _check_alpha(alpha)
    if not z > 0.0:
        raise DomainError(f"z_density is defined for z > 0, got {z}")
    return z ** (alpha - 1.0) * _z_kernel(alpha, z)


def z_laplace(alpha: float, theta: float) -> float:
    """int_0^inf e^(-theta z) z_density(alpha, z) dz by adaptive quadrature.

    The z^(alpha-1) factor on [0, 1] is carried by an algebraic weight.
    """
    _check_alpha(alpha)
    if theta < 0.0:
        raise ParameterError(f"theta must be >= 0, got {theta}")
    head = integrate.quad(
        lambda z: math.exp(-theta * z) * _z_kernel(alpha, z), 0.0, 1.0,
        weight="alg", wvar=(alpha - 1.0, 0.0), epsabs=1e-13, epsrel=1e-11, limit=200,
    )[0]
    rest = integrate.quad(
        lambda z: math.exp(-theta * z) * z_density(alpha, z), 1.0, np.inf,
        epsabs=1e-13, epsrel=1e-11, limit=400,
    )[0]
    return head + rest


def aging_curve(alpha: float, thetas) -> np.ndarray:
    return np.array([aging_limit(alpha, float(t)) for t in thetas])


def beta_form_reference(alpha: float, theta: float) -> float:
    """Lambda(theta) = 1 - I_{theta/(1+theta)}(1 - alpha, alpha) via the regularized incomplete Beta."""
    return float(special.betaincc(1.0 - alpha, alpha, theta / (1.0 + theta)))
