"""Special functions and exact combinatorics.

Real log-gamma, digamma, complex log-gamma, ascending factorials
``[x]_m = Gamma(x + m) / Gamma(x)``, signed Stirling numbers of both kinds
held as exact Python integers, and the precision context used for the
alternating Stirling sums of the coalescent transition law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

__all__ = [
    "PrecisionContext",
    "StirlingTables",
    "ascending_factorial",
    "complex_log_gamma",
    "digamma",
    "log_ascending_factorial",
    "log_gamma",
    "mean_turning_time",
    "stirling_first",
    "stirling_second",
    "stirling_tables",
]

EULER_GAMMA = 0.57721566490153286061

# Taylor coefficients of ln Gamma(1 + z) = -gamma z + sum_k (-1)^k zeta(k) z^k / k.
_LGAMMA1P_COEFFS = np.array(
    [0.0, -EULER_GAMMA]
    + [(-1) ** k * float(special.zeta(k)) / k for k in range(2, 40)]
)
_ROOT_WINDOW = 0.2


def _lgamma1p(z: float) -> float:
    """ln Gamma(1 + z) for |z| <= 0.2 by its power series (Horner)."""
    acc = 0.0
    for c in _LGAMMA1P_COEFFS[:0:-1]:
        acc = (acc + c) * z
    return acc


def log_gamma(x: float) -> float:
    """ln Gamma(x) for real x > 0.

    Relative accuracy is kept near the zeros at x = 1 and x = 2, where the
    library routine only has absolute accuracy.
    """
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    if abs(x - 1.0) < _ROOT_WINDOW:
        return _lgamma1p(x - 1.0)
    if abs(x - 2.0) < _ROOT_WINDOW:
        z = x - 2.0
        return _lgamma1p(z) + math.log1p(z)
    return math.lgamma(x)


# B_{2k} / (2k (2k - 1)) for the Stirling series of ln Gamma
_STIRLING_SERIES = (
    1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156, -3617 / 122400,
)
_SHIFT_TO = 20.0


def log_ascending_factorial(x, m):
    """ln [x]_m, vectorised over numpy arrays. Requires x > 0, m >= 0.

    Computed as a difference of Stirling series after shifting x above 20,
    so the result keeps relative accuracy even when m << x (where
    gammaln(x + m) - gammaln(x) cancels).
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    if np.any(x <= 0):
        raise ValueError("ascending factorial requires x > 0")
    if np.any(m < 0):
        raise ValueError("ascending factorial requires m >= 0")
    x, m = np.broadcast_arrays(x, m)
    shift = np.maximum(0.0, np.ceil(_SHIFT_TO - x))
    # [x]_m = [x + K]_m * prod_{r<K} (x + r) / (x + m + r)
    corr = np.zeros(x.shape)
    for r in range(int(shift.max()) if shift.size else 0):
        active = r < shift
        corr -= np.where(active, np.log1p(m / (x + r)), 0.0)
    z = x + shift
    w = z + m
    lr = np.log1p(m / z)
    out = (z - 0.5) * lr + m * np.log(w) - m
    for k, c in enumerate(_STIRLING_SERIES, 1):
        p = 2 * k - 1
        out += c * z**-p * np.expm1(-p * lr)
    out = out + corr
    return out if out.ndim else float(out)


def ascending_factorial(x: float, m: float) -> float:
    """[x]_m = Gamma(x + m) / Gamma(x), evaluated in log space.

    >>> ascending_factorial(3, 2)
    12.0
    """
    if not x > 0:
        raise ValueError(f"ascending factorial requires x > 0, got {x!r}")
    if m < 0:
        raise ValueError(f"ascending factorial requires m >= 0, got {m!r}")
    if m == 0:
        return 1.0
    if float(m).is_integer() and m <= 32:
        # exact product for small integer orders
        out = 1.0
        for r in range(int(m)):
            out *= x + r
        return out
    return math.exp(log_gamma(x + m) - log_gamma(x))


def digamma(x: float) -> float:
    """Psi(x) = Gamma'(x) / Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    return float(special.digamma(x))


def complex_log_gamma(z: complex) -> complex:
    """ln Gamma(z) for Re z > 0.

    The branch is the analytic continuation from the positive real axis, so
    ``complex_log_gamma(z + 1) - complex_log_gamma(z) == log(z)`` holds
    without 2*pi*i jumps.
    """
    z = complex(z)
    if not z.real > 0.0:
        raise ValueError(f"complex_log_gamma requires Re z > 0, got {z!r}")
    return complex(special.loggamma(z))


def mean_turning_time(xtol: float = 1e-12) -> float:
    """Time t0 at which t -> 1/Gamma(1 + exp(-t)) switches from rising to falling.

    Solves Psi(1 + exp(-t0)) = 0 by bisection on [0, 5].
    """
    return optimize.bisect(lambda t: digamma(1.0 + math.exp(-t)), 0.0, 5.0, xtol=xtol)


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision for cancellation-prone sums.

    ``bits`` is the mantissa floor; evaluations add guard bits sized from the
    magnitude of the largest term so the requested bits survive cancellation.
    """

    bits: int = 256
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    adaptive: bool = True

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError(f"precision bits must be >= 64, got {self.bits}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")


class StirlingTables:
    """Exact signed Stirling numbers s(n, k) and S(n, k) for 0 <= k <= n <= n_max.

    ``first_signed[n][k]`` satisfies (x)_n = sum_k s(n, k) x^k for the falling
    factorial (x)_n; ``second[n][k]`` satisfies x^n = sum_k S(n, k) (x)_k.
    """

    def __init__(self, n_max: int = 200):
        if n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {n_max}")
        self.n_max = int(n_max)
        first = [[1]]
        second = [[1]]
        for n in range(self.n_max):
            prev_s, prev_S = first[n], second[n]
            row_s = [0] * (n + 2)
            row_S = [0] * (n + 2)
            for k in range(1, n + 2):
                lower_s = prev_s[k - 1]
                lower_S = prev_S[k - 1]
                same_s = prev_s[k] if k <= n else 0
                same_S = prev_S[k] if k <= n else 0
                row_s[k] = lower_s - n * same_s
                row_S[k] = lower_S + k * same_S
            first.append(row_s)
            second.append(row_S)
        self.first_signed = first
        self.second = second

    def _check(self, n: int, k: int) -> None:
        if not (0 <= k <= n <= self.n_max):
            raise IndexError(f"Stirling index (n={n}, k={k}) outside 0 <= k <= n <= {self.n_max}")

    def first(self, n: int, k: int) -> int:
        self._check(n, k)
        return self.first_signed[n][k]

    def second_kind(self, n: int, k: int) -> int:
        self._check(n, k)
        return self.second[n][k]


@lru_cache(maxsize=8)
def _cached_tables(n_max: int) -> StirlingTables:
    return StirlingTables(n_max)


def stirling_tables(n_max: int = 200) -> StirlingTables:
    """Shared immutable table covering at least ``n_max`` (built once per size)."""
    return _cached_tables(max(int(n_max), 200))


def stirling_first(n: int, k: int, tables: StirlingTables | None = None) -> int:
    """Signed Stirling number of the first kind s(n, k)."""
    tables = tables if tables is not None else stirling_tables(n)
    return tables.first(n, k)


def stirling_second(n: int, k: int, tables: StirlingTables | None = None) -> int:
    """Stirling number of the second kind S(n, k)."""
    tables = tables if tables is not None else stirling_tables(n)
    return tables.second_kind(n, k)
