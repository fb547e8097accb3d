"""Heat kernels on the four domains and the closed-form pair-interaction masses.

Kernels are evaluated by the method of images; the circle kernel switches to
the Jacobi theta form once the nome is small.  The pair-mass functions return
the analytically integrated interaction masses, each backed by an independent
quadrature oracle used in the verification suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate


class Domain(str, Enum):
    INTERVAL01 = "interval01"
    HALFLINE = "halfline"
    LINE = "line"
    CIRCLE = "circle"

    @classmethod
    def from_string(cls, name):
        key = str(name).strip().lower()
        aliases = {"[0,1]": "interval01", "interval": "interval01",
                   "half-line": "halfline", "[0,inf)": "halfline",
                   "r": "line", "real": "line", "torus": "circle",
                   "r/z": "circle"}
        key = aliases.get(key, key)
        for d in cls:
            if d.value == key:
                return d
        raise ValueError(f"unknown domain {name!r}")


@dataclass(frozen=True)
class KernelParams:
    k: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("diffusion parameter k must be positive")

    @property
    def m(self):
        """Particular mass, the multiplicative inverse of k."""
        return 1.0 / self.k


_REL_TOL = 1e-15
_THETA_SWITCH = 0.2  # circle: use the theta series once k*t >= this


def _gauss(d, v):
    """Heat Gaussian with variance v: exp(-d^2/(2v)) / sqrt(2 pi v)."""
    return math.exp(-d * d / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)


def kernel(domain: Domain, x: float, y: float, t: float, params: KernelParams) -> float:
    """Heat kernel K_D(x, y, t; k); image sums truncated at 1e-15 relative."""
    if not t > 0:
        raise ValueError("the heat kernel needs t > 0")
    k = params.k
    v = 2.0 * k * t
    if domain is Domain.LINE:
        return _gauss(x - y, v)
    if domain is Domain.HALFLINE:
        if x < 0 or y < 0:
            raise ValueError("half-line positions must be nonnegative")
        return _gauss(x - y, v) + _gauss(x + y, v)
    if domain is Domain.CIRCLE:
        if k * t >= _THETA_SWITCH:
            return theta3(math.pi * (x - y), math.exp(-4.0 * math.pi ** 2 * k * t))
        total = _gauss(x - y, v)
        p = 1
        while True:
            inc = _gauss(x - y - p, v) + _gauss(x - y + p, v)
            total += inc
            if inc < _REL_TOL * total:
                return total
            p += 1
    if domain is Domain.INTERVAL01:
        if not (0 <= x <= 1 and 0 <= y <= 1):
            raise ValueError("interval positions must lie in [0, 1]")
        total = _gauss(x - y, v) + _gauss(x + y, v)
        p = 2
        while True:
            inc = (_gauss(x - y - p, v) + _gauss(x - y + p, v)
                   + _gauss(x + y - p, v) + _gauss(x + y + p, v))
            total += inc
            if inc < _REL_TOL * total:
                return total
            p += 2
    raise ValueError(f"unknown domain {domain!r}")


def theta3(z: float, q: float) -> float:
    """Jacobi theta_3(z, q) = 1 + 2 sum q^(n^2) cos(2nz), for 0 <= q < 1."""
    if not 0 <= q < 1:
        raise ValueError("the nome must satisfy 0 <= q < 1")
    if q == 0.0:
        return 1.0
    terms = [1.0]
    n = 1
    while True:
        w = q ** (n * n)
        terms.append(2.0 * w * math.cos(2.0 * n * z))
        if w < 1e-18:
            break
        n += 1
    return math.fsum(terms)


def theta3_product(z: float, q: float) -> float:
    """Jacobi triple product form, evaluated in log space for accuracy."""
    if not 0 <= q < 1:
        raise ValueError("the nome must satisfy 0 <= q < 1")
    if q == 0.0:
        return 1.0
    cos2z = math.cos(2.0 * z)
    logs = []
    m = 1
    while True:
        q2m = q ** (2 * m)
        a = q ** (4 * m - 2) + 2.0 * q ** (2 * m - 1) * cos2z
        logs.append(math.log1p(-q2m))
        logs.append(math.log1p(a) if a > -0.5 else math.log(1.0 + a))
        if q2m < 1e-18 and abs(a) < 1e-18:
            break
        m += 1
    return math.exp(math.fsum(logs))


# -- pair-interaction masses --------------------------------------------------


def pair_mass_line(y1: float, y2: float, m1: float, m2: float) -> float:
    """Net mass coefficient of [Y1, Y2] generated on the line: exactly 1/2."""
    if m1 <= 0 or m2 <= 0:
        raise ValueError("particular masses must be positive")
    if y1 == y2:
        return 0.0
    if y1 > y2:
        raise ValueError("pair masses assume y1 < y2")
    return 0.5


def pair_mass_line_quadrature(y1, y2, m1, m2, form="space"):
    """Independent oracle: integrate the generated-mass densities directly.

    form="space": the time-integrated rational density over x in R.
    form="time":  the t-density (already integrated in x) over (0, inf).
    """
    if form == "space":
        def f(x):
            return ((y2 - y1) * math.sqrt(m1 * m2)
                    / (2.0 * math.pi * (m1 * (x - y1) ** 2 + m2 * (x - y2) ** 2)))
        val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
        return val
    if form == "time":
        def f(t):
            return (0.25 * math.sqrt(m1 * m2) / (math.sqrt(math.pi) * t ** 1.5
                    * math.sqrt(m1 + m2))
                    * math.exp(-0.25 * m1 * m2 * (y2 - y1) ** 2 / (t * (m1 + m2)))
                    * (y2 - y1))
        val, _ = integrate.quad(f, 0, np.inf, epsabs=1e-12, epsrel=1e-12)
        return val
    raise ValueError("form must be 'space' or 'time'")


@dataclass(frozen=True)
class HalflinePairMass:
    direct: float
    reflected: float

    @property
    def total(self):
        return self.direct + self.reflected

    @property
    def variation_bound(self):
        return min(self.total, 1.0)


def pair_mass_halfline(y1: float, y2: float, m1: float, m2: float) -> HalflinePairMass:
    """The two arctan masses on [0, +inf) for sources at 0 <= y1 < y2."""
    if not (0 <= y1 < y2):
        raise ValueError("need 0 <= y1 < y2 on the half-line")
    if m1 <= 0 or m2 <= 0:
        raise ValueError("particular masses must be positive")
    s = math.sqrt(m1 * m2)
    direct = math.atan((m2 * y2 + m1 * y1) / (s * (y2 - y1))) / math.pi
    reflected = math.atan((m2 * y2 - m1 * y1) / (s * (y2 + y1))) / math.pi
    return HalflinePairMass(direct=direct, reflected=reflected)


def _halfline_gen_terms(y1, y2, m1, m2):
    msum = m1 + m2
    kk = 1.0 / msum
    mu1 = (m1 * y1 + m2 * y2) / msum
    mu2 = (-m1 * y1 + m2 * y2) / msum

    def rho(t, gap):
        return (0.25 * math.sqrt(m1 * m2) / (math.sqrt(math.pi) * t ** 1.5 * math.sqrt(msum))
                * math.exp(-0.25 * m1 * m2 * gap ** 2 / (t * msum)) * gap)

    def direct(t, x):
        v = 2.0 * kk * t
        return (_gauss(x - mu1, v) - _gauss(x + mu1, v)) * rho(t, y2 - y1)

    def reflected(t, x):
        v = 2.0 * kk * t
        return (_gauss(x - mu2, v) - _gauss(x + mu2, v)) * rho(t, y2 + y1)

    return direct, reflected


def pair_mass_halfline_quadrature(y1, y2, m1, m2):
    """2-D quadrature of the two-image generated-mass density over (t, x)."""
    direct, reflected = _halfline_gen_terms(y1, y2, m1, m2)

    def integrate_term(f):
        def inner(t):
            val, _ = integrate.quad(lambda x: f(t, x), 0, np.inf,
                                    epsabs=1e-11, epsrel=1e-11, limit=200)
            return val
        val, _ = integrate.quad(inner, 0, np.inf, epsabs=1e-10, epsrel=1e-10,
                                limit=200)
        return val

    return HalflinePairMass(direct=integrate_term(direct),
                            reflected=integrate_term(reflected))


@dataclass(frozen=True)
class CirclePairMass:
    net_coefficient: float
    variation_bound: float
    flux_profile: tuple  # ((y1, flux mass), (y2, flux mass))


def boundary_flux_mass(y: float) -> float:
    """Total boundary flux generated by a unit point mass at y in (0, 1)."""
    return 0.5 - (y % 1.0)


def pair_mass_circle(y1: float, y2: float) -> CirclePairMass:
    """Net coefficient 1/2 + y1 - y2 (mod 1), variation bounded by 1/2."""
    d = (y2 - y1) % 1.0
    return CirclePairMass(
        net_coefficient=0.5 - d,
        variation_bound=0.5,
        flux_profile=((y1 % 1.0, boundary_flux_mass(y1)),
                      (y2 % 1.0, boundary_flux_mass(y2))),
    )


def s_plus(y: float, t: float, m: float) -> float:
    """The S_+ series of the circle pair computation (half-gap y, time t)."""
    total = 0.0
    n = 0
    while True:
        done = True
        for u in ((2.0 * y + n,) if n == 0 else (2.0 * y + n, 2.0 * y - n)):
            term = (0.25 * math.sqrt(m) * u / (math.sqrt(2.0 * math.pi) * t ** 1.5)
                    * math.exp(-0.25 * m * u * u / (2.0 * t)))
            total += term
            if abs(term) > 1e-18 * (abs(total) + 1e-30):
                done = False
        if n > 2 and done:
            return total
        n += 2


def s_plus_time_integral(y: float, tau: float, m: float) -> float:
    """int_0^tau S_+ dt, by the closed erf form; tends to 1/2 - y."""
    total = 0.0
    n = 0
    while True:
        done = True
        for u in ((2.0 * y + n,) if n == 0 else (2.0 * y + n, 2.0 * y - n)):
            term = 0.5 * (math.copysign(1.0, u)
                          - math.erf(u * math.sqrt(m) / math.sqrt(8.0 * tau)))
            total += term
            if abs(term) > 1e-16:
                done = False
        if n > 2 and done:
            return total
        n += 2


def s_plus_time_integral_quadrature(y: float, tau: float, m: float) -> float:
    """Independent oracle: numeric time quadrature of the S_+ series."""
    val, _ = integrate.quad(lambda t: s_plus(y, t, m), 0, tau,
                            epsabs=1e-11, epsrel=1e-11, limit=400)
    return val


# -- oracle helpers used by the verification suite ----------------------------


def mass_conservation_residual(domain: Domain, x: float, t: float,
                               params: KernelParams) -> float:
    """|int_D K(x, y, t) dy - 1| by quadrature."""
    if domain is Domain.LINE:
        val, _ = integrate.quad(lambda y: kernel(domain, x, y, t, params),
                                -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
    elif domain is Domain.HALFLINE:
        val, _ = integrate.quad(lambda y: kernel(domain, x, y, t, params),
                                0, np.inf, epsabs=1e-12, epsrel=1e-12)
    else:
        val, _ = integrate.quad(lambda y: kernel(domain, x, y, t, params),
                                0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
    return abs(val - 1.0)


def semigroup_residual(domain: Domain, x: float, y: float, t: float, s: float,
                       params: KernelParams) -> float:
    """|int K(x,z,t) K(z,y,s) dz - K(x,y,t+s)| by quadrature."""
    f = lambda z: kernel(domain, x, z, t, params) * kernel(domain, z, y, s, params)
    if domain is Domain.LINE:
        val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
    elif domain is Domain.HALFLINE:
        val, _ = integrate.quad(f, 0, np.inf, epsabs=1e-12, epsrel=1e-12)
    else:
        val, _ = integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
    return abs(val - kernel(domain, x, y, t + s, params))
