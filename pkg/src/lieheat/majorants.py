"""Quadratic fixed-point majorant series for the expansion norms.

Every majorant is the g(0)=0 power-series solution of

    g = c_linear*x + c_quad*x^2 + c_cross*x*(g-x) + c_square*(g-x)^2

in the mass variable x.  Coefficients are exact rationals; the closed form is
the smaller root of the quadratic and the convergence radius is the positive
branch point of its discriminant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .freealg import rational

_NAMES = (
    "magnus_heat",
    "wilcox_halfline",
    "wilcox_improved",
    "sym_outward_improved",
    "magnus_periodic_improved",
)


class OutOfRadiusError(ValueError):
    pass


@dataclass(frozen=True)
class MajorantSpec:
    name: str
    c_linear: Fraction
    c_quad: Fraction
    c_cross: Fraction
    c_square: Fraction
    delta: Fraction | None = None

    def __post_init__(self):
        if self.c_square <= 0:
            raise ValueError("c_square must be positive for a genuine quadratic")
        for c in (self.c_linear, self.c_quad, self.c_cross):
            if c < 0:
                raise ValueError("majorant coefficients must be nonnegative")


def majorant_spec(name: str, delta=1) -> MajorantSpec:
    """Catalogue of the named majorant equations.

    magnus_heat                g = x + (1/4) g^2
    wilcox_halfline            g = x - (1/4) x^2 + (1/2) g^2
    wilcox_improved            g = x + (1/4) x^2 + x (g-x) + (1/4)(g-x)^2
    sym_outward_improved       g = x + (1/4) x^2 + (1/2) x (g-x) + (1/8)(g-x)^2
    magnus_periodic_improved   same with the x^2 term scaled by Delta in (0,1]
    """
    q = rational
    key = name.strip().lower()
    if key == "magnus_heat":
        # x + g^2/4 rewritten in terms of u = g - x
        return MajorantSpec(key, q(1), q(1, 4), q(1, 2), q(1, 4))
    if key == "wilcox_halfline":
        # x - x^2/4 + g^2/2 rewritten in terms of u = g - x
        return MajorantSpec(key, q(1), q(1, 4), q(1), q(1, 2))
    if key == "wilcox_improved":
        return MajorantSpec(key, q(1), q(1, 4), q(1), q(1, 4))
    if key == "sym_outward_improved":
        return MajorantSpec(key, q(1), q(1, 4), q(1, 2), q(1, 8))
    if key == "magnus_periodic_improved":
        d = q(delta) if not isinstance(delta, float) else q(Fraction(delta).limit_denominator(10**9))
        if not 0 < d <= 1:
            raise ValueError("Delta must lie in (0, 1]")
        return MajorantSpec(key, q(1), d * q(1, 4), q(1, 2), q(1, 8), delta=d)
    raise ValueError(f"unknown majorant spec {name!r}; choose from {_NAMES}")


def series_coeffs(spec: MajorantSpec, nmax: int):
    """Coefficients g_1..g_nmax of the unique solution with g(0)=0 (index = degree)."""
    if nmax < 1:
        raise ValueError("nmax must be at least 1")
    g = [rational(0)] * (nmax + 1)
    g[1] = rational(spec.c_linear)
    # u = g - x has u_1 = c_linear - 1 and u_n = g_n for n >= 2
    u = [rational(0)] * (nmax + 1)
    if nmax >= 1:
        u[1] = g[1] - 1
    for n in range(2, nmax + 1):
        val = rational(0)
        if n == 2:
            val += rational(spec.c_quad)
        val += rational(spec.c_cross) * u[n - 1]
        val += rational(spec.c_square) * sum(
            (u[j] * u[n - j] for j in range(1, n)), rational(0)
        )
        g[n] = val
        u[n] = val
    return g


def _poly(spec: MajorantSpec, x: float):
    """Discriminant of c_sq*u^2 + (c_cr*x - 1)*u + (c_q*x^2 + (c_l - 1)*x) = 0."""
    c_l, c_q, c_cr, c_sq = (float(spec.c_linear), float(spec.c_quad),
                            float(spec.c_cross), float(spec.c_square))
    return (1.0 - c_cr * x) ** 2 - 4.0 * c_sq * (c_q * x * x + (c_l - 1.0) * x)


def radius(spec: MajorantSpec) -> float:
    """Positive branch point where the two quadratic roots meet."""
    c_l, c_q, c_cr, c_sq = (float(spec.c_linear), float(spec.c_quad),
                            float(spec.c_cross), float(spec.c_square))
    # D(x) = (c_cr^2 - 4 c_sq c_q) x^2 - (2 c_cr + 4 c_sq (c_l - 1)) x + 1
    a = c_cr * c_cr - 4.0 * c_sq * c_q
    b = -(2.0 * c_cr + 4.0 * c_sq * (c_l - 1.0))
    if a == 0.0:
        return -1.0 / b
    disc = b * b - 4.0 * a
    roots = [r for r in ((-b - math.sqrt(disc)) / (2 * a),
                         (-b + math.sqrt(disc)) / (2 * a)) if r > 0]
    return min(roots)


def closed_form(spec: MajorantSpec, x: float) -> float:
    """The g(0)=0 branch of the quadratic, valid for 0 <= x < radius."""
    if x < 0:
        raise OutOfRadiusError("the majorant variable is a nonnegative mass")
    disc = _poly(spec, x)
    if x > radius(spec) or disc < 0:
        raise OutOfRadiusError(f"x={x} is beyond the convergence radius of {spec.name}")
    c_cr, c_sq = float(spec.c_cross), float(spec.c_square)
    u = ((1.0 - c_cr * x) - math.sqrt(disc)) / (2.0 * c_sq)
    return x + u


def partial_sum(spec: MajorantSpec, x: float, nterms: int) -> float:
    coeffs = series_coeffs(spec, nterms)
    return float(sum(float(c) * x ** n for n, c in enumerate(coeffs)))
