"""Smooth shaping functions used by the longitudinal controller.

Each function returns ``(value, derivative)`` so callers that need the slope
at the same argument (the underlying-acceleration term) get it in one call.

* ``g``: bounded wrapper, ``g(x) = (2/pi) * atan(pi/2 * x)``.
* ``p``: integrator suppression, ``p(x) = x / (1 + x**(2n) / (2n - 1))``.
* ``q``: comfortable-approach profile with asymptote ``sqrt(2 b x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_HALF_PI = 0.5 * math.pi
_TWO_OVER_PI = 2.0 / math.pi

# past this magnitude x**(2n) may overflow; p and p' use their leading asymptotic terms
_P_ASYMPTOTIC = 1e8


@dataclass(frozen=True)
class PShape:
    """Order ``n`` of the integrator suppression function."""

    n: int = 2

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"p-shape order must be an integer >= 1, got {self.n}")


@dataclass(frozen=True)
class QShape:
    """Asymptote parameter ``b`` and slackness ``c`` of the approach profile."""

    b: float
    c: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"q-shape asymptote parameter b must be > 0, got {self.b}")
        if not self.c > 0:
            raise ValueError(f"q-shape slackness c must be > 0, got {self.c}")


def _check(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"shaping function argument must be finite, got {x}")
    return x


def shape_g(x: float) -> tuple[float, float]:
    """Return ``g(x)`` and ``g'(x)``."""
    _check(x)
    z = _HALF_PI * x
    return _TWO_OVER_PI * math.atan(z), 1.0 / (1.0 + z * z)


def shape_p(x: float, shape: PShape = PShape()) -> tuple[float, float]:
    """Return ``p(x)`` and ``p'(x)`` for order ``shape.n``.

    ``p'(x) = (1 - x**(2n)) / (1 + x**(2n)/(2n-1))**2``, so ``p'(0) = 1`` and
    ``p'(1) = 0``.
    """
    _check(x)
    k = 2 * shape.n - 1
    if abs(x) > _P_ASYMPTOTIC:
        # p ~ k / x**k,  p' ~ -k**2 / x**(k+1)
        r = 1.0 / x
        return k * r**k, -k * k * r ** (k + 1)
    x2n = x ** (2 * shape.n)
    den = 1.0 + x2n / k
    return x / den, (1.0 - x2n) / (den * den)


def shape_q(x: float, shape: QShape) -> tuple[float, float]:
    """Return ``q(x; b)`` and its analytic derivative.

    ``q(x) = G * sqrt(2 b x G + c**2)`` with ``G = g(x / c)``. The product
    ``x * G`` is never negative, so the square root is always real.
    """
    _check(x)
    b, c = shape.b, shape.c
    G, dG = shape_g(x / c)
    dG /= c
    S = math.sqrt(2.0 * b * x * G + c * c)
    value = G * S
    deriv = dG * S + b * G * (G + x * dG) / S
    return value, deriv


def g(x: float) -> float:
    return shape_g(x)[0]


def p(x: float, shape: PShape = PShape()) -> float:
    return shape_p(x, shape)[0]


def q(x: float, shape: QShape) -> float:
    return shape_q(x, shape)[0]
