"""Mittag-Leffler distribution (second type) and the Mittag-Leffler process.

eta(alpha) has moments Gamma(1 + m) / Gamma(1 + m alpha). The process X moves
from x to x**exp(-t) * eta(exp(-t)) in time t, so every moment of the
transition kernel, of the semigroup on polynomials and of the
finite-dimensional laws is available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .coalescent import MomentQuery
from .specfun import complex_log_gamma, digamma, log_gamma

__all__ = [
    "MLKernel",
    "MLParameter",
    "chapman_kolmogorov_defect",
    "characteristic_function",
    "generator_coeff",
    "generator_limit_estimate",
    "generator_truncated",
    "joint_moment",
    "kernel_moment",
    "kernel_sample",
    "ml_moment",
    "ml_sample",
    "process_mean_var",
    "semigroup_apply_mc",
    "semigroup_apply_poly",
]


@dataclass(frozen=True)
class MLParameter:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    @classmethod
    def at_time(cls, t: float) -> "MLParameter":
        return cls(math.exp(-t))

    def moment(self, m: float) -> float:
        return ml_moment(self.alpha, m)

    def sample(self, rng: np.random.Generator, size=None):
        return ml_sample(self.alpha, rng, size)


@dataclass(frozen=True)
class MLKernel:
    """The transition law p(t, x, .) = law of x**exp(-t) * eta(exp(-t))."""

    t: float
    x: float

    def __post_init__(self):
        if self.t < 0 or self.x < 0:
            raise ValueError("kernel needs t >= 0 and x >= 0")

    def moment(self, m: float) -> float:
        return kernel_moment(self.t, self.x, m)

    def sample(self, rng: np.random.Generator, size=None):
        return kernel_sample(self.t, self.x, rng, size)


def ml_moment(alpha: float, m: float) -> float:
    """E(eta**m) = Gamma(1 + m) / Gamma(1 + m alpha)."""
    MLParameter(alpha)
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0 or alpha == 1.0:
        return 1.0
    return math.exp(log_gamma(1.0 + m) - log_gamma(1.0 + m * alpha))


def ml_sample(alpha: float, rng: np.random.Generator, size=None):
    """Draw Mittag-Leffler(alpha) variates.

    Uses eta = S**(-alpha) for a positive alpha-stable S with Laplace transform
    exp(-lambda**alpha), written through Kanter's representation:

        eta = W**(1 - alpha) * sin(U) / (sin(alpha U)**alpha * sin((1 - alpha) U)**(1 - alpha))

    with U uniform on (0, pi) and W standard exponential. alpha = 0 and 1 are
    the exponential and point-mass cases.
    """
    MLParameter(alpha)
    if alpha == 1.0:
        return 1.0 if size is None else np.ones(size)
    w = rng.standard_exponential(size)
    if alpha == 0.0:
        return w
    u = math.pi * (1.0 - rng.random(size))
    b = 1.0 - alpha
    return w**b * np.sin(u) / (np.sin(alpha * u) ** alpha * np.sin(b * u) ** b)


def kernel_moment(t: float, x: float, m: float) -> float:
    """int y**m p(t, x, dy) = x**(m e^-t) Gamma(1 + m) / Gamma(1 + m e^-t)."""
    if t < 0 or x < 0 or m < 0:
        raise ValueError("need t, x, m >= 0")
    if m == 0:
        return 1.0
    a = math.exp(-t)
    if x == 0:
        return 0.0
    return math.exp(m * a * math.log(x) + log_gamma(1.0 + m) - log_gamma(1.0 + m * a))


def kernel_sample(t: float, x: float, rng: np.random.Generator, size=None):
    if t < 0 or x < 0:
        raise ValueError("need t >= 0 and x >= 0")
    a = math.exp(-t)
    return x**a * ml_sample(a, rng, size)


def _mp_kernel_moment(t, x, m):
    a = mpmath.exp(-t)
    if m == 0:
        return mpmath.mpf(1)
    return mpmath.power(x, m * a) * mpmath.gamma(1 + m) / mpmath.gamma(1 + m * a)


def chapman_kolmogorov_defect(s: float, t: float, x: float, m_max: int, bits: int = 128) -> np.ndarray:
    """|moment of p(s+t, x, .) - moment of (p(t, x, .) then p(s, ., .))| for m = 0..m_max.

    Both sides are evaluated independently at ``bits`` of precision; the
    composed side integrates the time-s moment y**(m e^-s) Gamma(1+m)/Gamma(1+m e^-s)
    against p(t, x, dy).
    """
    if s < 0 or t < 0 or not x > 0 or m_max < 1:
        raise ValueError("need s, t >= 0, x > 0 and m_max >= 1")
    out = []
    with mpmath.workprec(bits):
        s_, t_, x_ = mpmath.mpf(s), mpmath.mpf(t), mpmath.mpf(x)
        for m in range(m_max + 1):
            direct = _mp_kernel_moment(s_ + t_, x_, m)
            inner = m * mpmath.exp(-s_)
            composed = mpmath.gamma(1 + m) / mpmath.gamma(1 + inner) * _mp_kernel_moment(t_, x_, inner)
            out.append(float(abs(direct - composed)))
    return np.array(out)


def joint_moment(q: MomentQuery) -> float:
    """E(X_{t_1}**m_1 ... X_{t_k}**m_k) for the process started at X_0 = 1."""
    x = q.weights
    log_val = 0.0
    for j in range(1, q.k + 1):
        log_val += log_gamma(1.0 + x[j] + q.exponents[j - 1]) - log_gamma(1.0 + x[j - 1])
    return math.exp(log_val)


def process_mean_var(t: float) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be >= 0")
    a = math.exp(-t)
    mean = math.exp(-log_gamma(1.0 + a))
    var = math.exp(math.log(2.0) - log_gamma(1.0 + 2.0 * a)) - mean * mean
    return mean, max(var, 0.0)


def generator_coeff(k: int, x: float) -> float:
    """a_k(x) = lim_{t -> 0} E((x**exp(-t) eta_t - x)**k) / t."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        if not x > 0:
            raise ValueError("a_1(x) needs x > 0")
        return x * digamma(2.0) - x * math.log(x)
    return (-x) ** k / (k - 1)


def generator_limit_estimate(k: int, x: float, t: float, bits: int = 192) -> float:
    """E((x**exp(-t) eta_t - x)**k) / t by binomial expansion over kernel moments.

    Computed at ``bits`` of precision since the expansion cancels to O(t).
    """
    if not 0 < t <= 0.1:
        raise ValueError("t must lie in (0, 0.1]")
    if int(k) != k or not 1 <= k <= 8:
        raise ValueError("k must be an integer in 1..8")
    if not x > 0:
        raise ValueError("x must be > 0")
    with mpmath.workprec(bits):
        t_, x_ = mpmath.mpf(t), mpmath.mpf(x)
        total = mpmath.fsum(
            math.comb(k, l) * (-x_) ** (k - l) * _mp_kernel_moment(t_, x_, l) for l in range(k + 1)
        )
        return float(total / t_)


def generator_truncated(derivatives: Sequence[float], x: float) -> float:
    """sum_{k=1}^{K} f^(k)(x) / k! * a_k(x), with ``derivatives[k-1] = f^(k)(x)``.

    This is only the truncation of the generator series at order K; no bound
    on the omitted remainder is known, so the value is not a certified Af(x).
    """
    return math.fsum(d / math.factorial(k) * generator_coeff(k, x) for k, d in enumerate(derivatives, 1))


def characteristic_function(t: float, x: float) -> complex:
    """E(exp(i x log X_t)) = Gamma(1 + i x) / Gamma(1 + i x e^-t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if x == 0 or t == 0:
        return 1.0 + 0.0j
    a = math.exp(-t)
    return complex(np.exp(complex_log_gamma(1 + 1j * x) - complex_log_gamma(1 + 1j * x * a)))


def semigroup_apply_poly(t: float, coefficients: Sequence[float], x: float) -> float:
    """T_t f(x) for f(y) = sum_m c_m y**m."""
    if t < 0 or x < 0:
        raise ValueError("need t >= 0 and x >= 0")
    return math.fsum(c * kernel_moment(t, x, m) for m, c in enumerate(coefficients) if c)


def semigroup_apply_mc(
    f: Callable[[np.ndarray], np.ndarray], t: float, x, draws: np.ndarray
) -> np.ndarray:
    """Monte Carlo T_t f on a grid of x, reusing Mittag-Leffler(e^-t) ``draws``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    a = math.exp(-t)
    return np.array([f(xi**a * draws).mean() for xi in x])
