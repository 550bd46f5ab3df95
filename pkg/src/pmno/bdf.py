"""Backward differentiation formula coefficients for k = 1..6.

Convention: ``sum_j a[j] * u[i+j] = dt * b_k * N[u[i+k]]`` with ``a[k] = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F

from .errors import ConfigError

MAX_ORDER = 6

# a_0..a_k (oldest first) and b_k, exact rationals.
_TABLE: dict[int, tuple[tuple[F, ...], F]] = {
    1: ((F(-1), F(1)), F(1)),
    2: ((F(1, 3), F(-4, 3), F(1)), F(2, 3)),
    3: ((F(-2, 11), F(9, 11), F(-18, 11), F(1)), F(6, 11)),
    4: ((F(3, 25), F(-16, 25), F(36, 25), F(-48, 25), F(1)), F(12, 25)),
    5: ((F(-12, 137), F(75, 137), F(-200, 137), F(300, 137), F(-300, 137), F(1)), F(60, 137)),
    6: (
        (F(10, 147), F(-72, 147), F(225, 147), F(-400, 147), F(450, 147), F(-360, 147), F(1)),
        F(60, 147),
    ),
}


@dataclass(frozen=True)
class BdfScheme:
    k: int
    a: tuple[float, ...]
    b_k: float
    a_exact: tuple[F, ...]
    b_exact: F

    def consistency_sums(self) -> tuple[float, float]:
        """Return (sum_j a_j, sum_j j*a_j - b_k); both vanish for a consistent scheme."""
        s0 = sum(self.a)
        s1 = sum(j * aj for j, aj in enumerate(self.a)) - self.b_k
        return s0, s1


def bdf_coefficients(k: int) -> BdfScheme:
    if not isinstance(k, int) or k < 1 or k > MAX_ORDER:
        raise ConfigError(f"BDF order must be an integer in 1..{MAX_ORDER} (zero-stability), got {k!r}")
    a, b = _TABLE[k]
    return BdfScheme(k=k, a=tuple(float(x) for x in a), b_k=float(b), a_exact=a, b_exact=b)


def integrate_linear(scheme: BdfScheme, rate: float, u_start: list[float], dt: float, steps: int) -> list[float]:
    """Classical BDF integration of ``u' = rate * u``.

    ``u_start`` holds the first k values; each implicit step is solved in
    closed form since the right-hand side is linear.
    """
    k = scheme.k
    if len(u_start) != k:
        raise ConfigError(f"need {k} starting values, got {len(u_start)}")
    u = list(u_start)
    denom = 1.0 - dt * scheme.b_k * rate
    for _ in range(steps):
        hist = sum(aj * uj for aj, uj in zip(scheme.a[:k], u[-k:]))
        u.append(-hist / denom)
    return u
