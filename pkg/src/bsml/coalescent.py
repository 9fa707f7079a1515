"""Block counting process of the Bolthausen-Sznitman n-coalescent.

N_t counts the blocks of the coalescent restricted to n individuals. It is a
decreasing Markov chain on {1, ..., n} with rates

    q_ij = i / ((i - j)(i - j + 1))   for j < i,      q_ii = 1 - i.

The scaled process is X_t = N_t / n**exp(-t).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np

from .specfun import (
    PrecisionContext,
    log_ascending_factorial,
    log_gamma,
    stirling_tables,
)

__all__ = [
    "CoalescentSpec",
    "JumpChainPath",
    "MomentQuery",
    "PrecisionError",
    "factorial_moment",
    "generator_entry",
    "generator_matrix",
    "grid_states",
    "inhomogeneous_semigroup_monomial",
    "joint_factorial_moment",
    "joint_polynomial_moment",
    "jump_distribution",
    "mean_and_variance",
    "sample_block_counts",
    "scaled_joint_raw_moment",
    "scaled_raw_moment",
    "semigroup_monomial_on_grid",
    "simulate_path",
    "transition_matrix",
    "transition_row",
]

N_MAX_EXACT = 200


class PrecisionError(ArithmeticError):
    """High-precision evaluation lost too many digits to be trusted."""


@dataclass(frozen=True)
class CoalescentSpec:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"sample size must be an integer >= 1, got {self.n!r}")


def _n(spec) -> int:
    return spec.n if isinstance(spec, CoalescentSpec) else CoalescentSpec(spec).n


@dataclass(frozen=True)
class JumpChainPath:
    """Event list of one block-counting trajectory, right-continuous."""

    times: tuple[float, ...]
    states: tuple[int, ...]
    horizon: float

    def __post_init__(self):
        if len(self.times) != len(self.states) or not self.times:
            raise ValueError("times and states must be non-empty and of equal length")
        if self.times[0] != 0.0:
            raise ValueError("paths start at time 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("event times must be strictly increasing")
        if any(b >= a for a, b in zip(self.states, self.states[1:])):
            raise ValueError("block counts must be strictly decreasing")
        if self.states[-1] < 1 or self.times[-1] > self.horizon:
            raise ValueError("path leaves {1,...,n} or exceeds the horizon")

    def state_at(self, t: float) -> int:
        if t < 0 or t > self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        return self.states[bisect.bisect_right(self.times, t) - 1]


@dataclass(frozen=True)
class MomentQuery:
    """Times 0 <= t_1 < ... < t_k with exponents m_1..m_k >= 0.

    ``weights[j] = sum_{i > j} m_i exp(-(t_i - t_j))`` for j = 0..k with t_0 = 0.
    """

    times: tuple[float, ...]
    exponents: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "exponents", tuple(float(m) for m in self.exponents))
        if not self.times or len(self.times) != len(self.exponents):
            raise ValueError("need equally many (>= 1) times and exponents")
        if self.times[0] < 0:
            raise ValueError("times must be >= 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError(f"times must be strictly increasing, got {self.times}")
        if any(m < 0 for m in self.exponents):
            raise ValueError("exponents must be >= 0")

    @property
    def k(self) -> int:
        return len(self.times)

    @cached_property
    def weights(self) -> tuple[float, ...]:
        grid = (0.0,) + self.times
        out = []
        for j in range(self.k + 1):
            out.append(
                math.fsum(
                    self.exponents[i - 1] * math.exp(-(grid[i] - grid[j]))
                    for i in range(j + 1, self.k + 1)
                )
            )
        return tuple(out)


# --------------------------------------------------------------------------
# generator and simulation


def generator_entry(i: int, j: int) -> float:
    if i < 1 or j < 1:
        raise IndexError(f"generator indices must be >= 1, got ({i}, {j})")
    if j > i:
        return 0.0
    if j == i:
        return float(1 - i)
    return i / ((i - j) * (i - j + 1))


def generator_matrix(n: int) -> np.ndarray:
    """Dense generator on states 1..n (row/column index = state - 1)."""
    q = np.zeros((n, n))
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            q[i - 1, j - 1] = generator_entry(i, j)
    return q


def jump_distribution(i: int) -> dict[int, float]:
    """Law of the state entered when leaving state i (embedded jump chain)."""
    if i < 2:
        raise ValueError(f"state {i} has no jumps")
    return {j: i / ((i - 1) * (i - j) * (i - j + 1)) for j in range(i - 1, 0, -1)}


def _jump_sizes(states: np.ndarray, u: np.ndarray) -> np.ndarray:
    # P(size <= k | i) = i k / ((i - 1)(k + 1)); inverted in closed form
    v = u * (states - 1) / states
    k = np.ceil(v / (1.0 - v))
    return np.clip(k, 1, states - 1).astype(states.dtype)


def simulate_path(spec, horizon: float, rng: np.random.Generator) -> JumpChainPath:
    """Jump-chain / holding-time simulation of N up to ``horizon``."""
    n = _n(spec)
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    times, states = [0.0], [n]
    clock, state = 0.0, n
    while state > 1:
        clock += rng.standard_exponential() / (state - 1)
        if clock > horizon:
            break
        state -= int(_jump_sizes(np.array([state]), np.array([rng.random()]))[0])
        times.append(clock)
        states.append(state)
    return JumpChainPath(tuple(times), tuple(states), float(horizon))


def sample_block_counts(n: int, times, size: int, rng: np.random.Generator) -> np.ndarray:
    """Simulate ``size`` independent chains from n; return N at ``times``.

    Vectorised across replicates. Output has shape (size, len(times)).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("observation times must be sorted and >= 0")
    kt = times.size
    out = np.empty((size, kt), dtype=np.int64)
    idx = np.arange(size)
    state = np.full(size, n, dtype=np.int64)
    clock = np.zeros(size)
    nxt = np.zeros(size, dtype=np.int64)
    while idx.size:
        rate = (state - 1).astype(float)
        with np.errstate(divide="ignore"):
            hold = rng.standard_exponential(idx.size) / rate
        new_clock = clock + hold
        for r in range(kt):
            sel = (nxt == r) & (new_clock > times[r])
            out[idx[sel], r] = state[sel]
            nxt[sel] += 1
        live = nxt < kt
        idx, state, new_clock, nxt = idx[live], state[live], new_clock[live], nxt[live]
        if idx.size:
            state = state - _jump_sizes(state, rng.random(idx.size))
        clock = new_clock
    return out


# --------------------------------------------------------------------------
# exact transition law


def _guard_bits(n: int, tables) -> int:
    s_row = tables.first_signed[n]
    worst = 0
    for j in range(1, n + 1):
        gj = math.factorial(j - 1).bit_length()
        for k in range(j, n + 1):
            worst = max(worst, abs(s_row[k]).bit_length() + tables.second[k][j].bit_length() + gj)
    return max(0, worst - math.factorial(n - 1).bit_length()) + 16


def transition_row(spec, t: float, ctx: PrecisionContext | None = None) -> np.ndarray:
    """P(N_t = j | N_0 = n) for j = 1..n.

    Alternating Stirling sum evaluated with exact integer coefficients at
    ``ctx.bits`` plus enough guard bits to absorb the cancellation.
    """
    n = _n(spec)
    ctx = ctx or PrecisionContext()
    if t < 0:
        raise ValueError("t must be >= 0")
    if n > N_MAX_EXACT:
        raise ValueError(f"exact transition law limited to n <= {N_MAX_EXACT}, got {n}")
    if n == 1:
        return np.ones(1)
    tables = stirling_tables(n)
    bits = ctx.bits + (_guard_bits(n, tables) if ctx.adaptive else 0)
    with mpmath.workprec(bits):
        decay = mpmath.exp(-mpmath.mpf(t))
        weighted = [mpmath.mpf(0)] + [tables.first_signed[n][k] * decay ** (k - 1) for k in range(1, n + 1)]
        denom = mpmath.factorial(n - 1)
        probs = []
        for j in range(1, n + 1):
            acc = mpmath.fsum(weighted[k] * tables.second[k][j] for k in range(j, n + 1))
            sign = 1 if (n + j) % 2 == 0 else -1
            probs.append(sign * acc * mpmath.factorial(j - 1) / denom)
        total = mpmath.fsum(probs)
        row = np.array([float(p) for p in probs])
    if np.any(row < -1e-20):
        raise PrecisionError(
            f"negative probability {row.min():.3e} at n={n}, t={t}; raise precision bits above {bits}"
        )
    deviation = abs(float(total) - 1.0)
    if deviation > 1e-10:
        raise PrecisionError(
            f"row sum deviates from 1 by {deviation:.3e} at n={n}, t={t}; raise precision bits above {bits}"
        )
    row = np.clip(row, 0.0, None)
    return row / row.sum()


def transition_matrix(n: int, t: float, ctx: PrecisionContext | None = None) -> np.ndarray:
    """Full matrix P(t)[i-1, j-1] = P(N_t = j | N_0 = i) on states 1..n."""
    p = np.zeros((n, n))
    for i in range(1, n + 1):
        p[i - 1, :i] = transition_row(i, t, ctx)
    return p


# --------------------------------------------------------------------------
# closed-form moments


def factorial_moment(spec, t: float, m: float) -> float:
    """E([N_t]_m) = Gamma(1 + m) [n]_{m e^-t} / Gamma(1 + m e^-t)."""
    n = _n(spec)
    if t < 0 or m < 0:
        raise ValueError("need t >= 0 and m >= 0")
    if m == 0:
        return 1.0
    if n == 1:
        return math.exp(log_gamma(1.0 + m))
    a = m * math.exp(-t)
    return math.exp(log_gamma(1.0 + m) - log_gamma(1.0 + a) + log_ascending_factorial(n, a))


def mean_and_variance(spec, t: float) -> tuple[float, float]:
    mean = factorial_moment(spec, t, 1.0)
    var = factorial_moment(spec, t, 2.0) - mean - mean * mean
    if var < -1e-10 * max(1.0, mean * mean):
        raise ArithmeticError(f"negative variance {var}")
    return mean, max(var, 0.0)


def joint_factorial_moment(spec, q: MomentQuery) -> float:
    """E(prod_j [N_{t_j} + x_j]_{m_j}) with x_j the query weights."""
    n = _n(spec)
    x = q.weights
    log_val = log_ascending_factorial(n, x[0])
    for j in range(1, q.k + 1):
        log_val += log_gamma(1.0 + x[j] + q.exponents[j - 1]) - log_gamma(1.0 + x[j - 1])
    return math.exp(log_val)


def _signed_stirling2(m: int) -> list[int]:
    """Coefficients c_i with x**m = sum_i c_i [x]_i."""
    tables = stirling_tables(m)
    return [(-1) ** (m - i) * tables.second[m][i] for i in range(m + 1)]


def scaled_raw_moment(spec, t: float, m: int) -> float:
    """Exact E((N_t / n**exp(-t))**m) for integer m >= 0."""
    n = _n(spec)
    if int(m) != m or m < 0:
        raise ValueError(f"raw moments need integer m >= 0, got {m!r}")
    m = int(m)
    if m == 0:
        return 1.0
    scale = m * math.exp(-t) * math.log(n)
    terms = []
    for i, c in enumerate(_signed_stirling2(m)):
        if c:
            terms.append(c * math.exp(math.log(factorial_moment(n, t, i)) - scale))
    return math.fsum(terms)


def grid_states(n: int, s: float, upper: float | None = None) -> np.ndarray:
    """States j whose scaled value j / n**exp(-s) lies in E_n(s) (and <= upper)."""
    scale = n ** math.exp(-s)
    top = n if upper is None else min(n, int(math.floor(upper * scale * (1 + 1e-12))))
    return np.arange(1, top + 1)


def _grid_state(n: int, s: float, x: float) -> int:
    j_real = x * n ** math.exp(-s)
    j = int(round(j_real))
    if j < 1 or j > n or abs(j_real - j) > 1e-9 * max(1.0, j_real):
        raise ValueError(f"x={x} is not a point of E_n(s) for n={n}, s={s}")
    return j


def semigroup_monomial_on_grid(n: int, s: float, t: float, m: int, states) -> np.ndarray:
    """E((X_{s+t})^m | X_s = j / n**exp(-s)) for an array of states j."""
    if int(m) != m or m < 0:
        raise ValueError("monomial degree must be an integer >= 0")
    states = np.asarray(states, dtype=float)
    if int(m) == 0:
        return np.ones_like(states)
    a = math.exp(-t)
    log_scale = m * math.exp(-(s + t)) * math.log(n)
    out = np.zeros_like(states)
    for i, c in enumerate(_signed_stirling2(int(m))):
        if not c:
            continue
        lead = log_gamma(1.0 + i) - log_gamma(1.0 + i * a)
        out += c * np.exp(lead + log_ascending_factorial(states, i * a) - log_scale)
    return out


def inhomogeneous_semigroup_monomial(spec, s: float, t: float, m: int, x: float) -> float:
    """T^{(n)}_{s,t} applied to y -> y**m at a grid point x of E_n(s)."""
    n = _n(spec)
    j = _grid_state(n, s, x)
    return float(semigroup_monomial_on_grid(n, s, t, m, [j])[0])


# --------------------------------------------------------------------------
# exact joint moments of polynomial functionals


def _times_ascending(poly, terms):
    """Multiply sum_b c_b [N]_b by the polynomial sum_l a_l N**l."""
    out: dict[mpmath.mpf, mpmath.mpf] = {}
    for beta, coef in terms.items():
        for l, a in enumerate(poly):
            if a == 0:
                continue
            # N**l = sum_r C(l, r) (-beta)**(l - r) (N + beta)**r
            for r in range(l + 1):
                w = a * coef * math.comb(l, r) * (-beta) ** (l - r)
                # (N + beta)**r [N]_beta = sum_i c_i [N]_{beta + i}
                for i, c in enumerate(_signed_stirling2(r)):
                    if c:
                        key = beta + i
                        out[key] = out.get(key, 0) + w * c
    return out


def joint_polynomial_moment(
    spec, times, polys, ctx: PrecisionContext | None = None
) -> float:
    """Exact E(prod_j poly_j(N_{t_j})) for polynomials in the block count.

    ``polys[j]`` lists monomial coefficients (constant first). Works backwards
    in time: a function sum_b c_b [N]_b at time t_j is mapped to its
    conditional expectation given N at the previous time through
    E([N_u]_g | N_0 = M) = Gamma(1 + g) [M]_{g e^-u} / Gamma(1 + g e^-u).
    """
    n = _n(spec)
    ctx = ctx or PrecisionContext()
    times = [float(t) for t in times]
    if len(times) != len(polys) or not times:
        raise ValueError("need one polynomial per time")
    if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be >= 0 and strictly increasing")
    grid = [0.0] + times
    with mpmath.workprec(ctx.bits):
        terms = {mpmath.mpf(0): mpmath.mpf(1)}
        for j in range(len(times), 0, -1):
            poly = [mpmath.mpf(c) for c in polys[j - 1]]
            terms = _times_ascending(poly, terms)
            decay = mpmath.exp(-(mpmath.mpf(grid[j]) - grid[j - 1]))
            lagged = {}
            for g, coef in terms.items():
                h = g * decay
                lagged[h] = lagged.get(h, 0) + coef * mpmath.gamma(1 + g) / mpmath.gamma(1 + h)
            terms = lagged
        total = mpmath.fsum(c * mpmath.rf(n, b) for b, c in terms.items())
        return float(total)


def scaled_joint_raw_moment(spec, times, exponents, ctx: PrecisionContext | None = None) -> float:
    """Exact E(prod_j (X_{t_j})**m_j) for integer exponents, X = N / n**exp(-t)."""
    n = _n(spec)
    if any(int(m) != m or m < 0 for m in exponents):
        raise ValueError("exponents must be integers >= 0")
    polys = [[0] * int(m) + [1] for m in exponents]
    scale = math.exp(-sum(m * math.exp(-t) for t, m in zip(times, exponents)) * math.log(n))
    return joint_polynomial_moment(n, times, polys, ctx) * scale
