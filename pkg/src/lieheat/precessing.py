"""Precessing measures over 2x2 real matrices: closed-form flows and verdicts.

The measure is the rotation conjugate of a trace-free matrix
M = [[a0, c0], [b0, -a0]] over one half-turn.  Everything here is closed
form: the time-ordered exponential, the (b, c) phase-plane trajectories, the
case classification with its Magnus-convergence verdict, the boundary flux of
the semistable case, and the exponential-image test that witnesses divergence.

The classification and the time-ordered exponential hold for any a0.  The
(b, c) phase-plane reduction (ode_rhs, trajectory, the flux closed forms) is
the rotation-normalized case a0 = 0: a trace-free diagonal couples back into
the flow (the rotation conjugation can always be chosen to remove it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import expm, logm

DEADBAND = 1e-12

J = np.array([[0.0, -1.0], [1.0, 0.0]])


class BlowupError(ValueError):
    """Requested time is beyond the trajectory's existence interval."""


class CaseTag(str, Enum):
    STATIONARY = "stationary"
    SEMISTABLE = "semistable"
    UNSTABLE_HYPERBOLIC = "unstable_hyperbolic"
    UNSTABLE_PARABOLIC = "unstable_parabolic"
    UNSTABLE_ELLIPTIC = "unstable_elliptic"
    STABLE = "stable"


@dataclass(frozen=True)
class PrecessState:
    a0: float
    b0: float
    c0: float
    k: float = 1.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("diffusion parameter k must be positive")

    @property
    def matrix(self):
        return np.array([[self.a0, self.c0], [self.b0, -self.a0]])

    @property
    def conserved(self):
        """(b+1)(c-1), constant along the flow."""
        return (self.b0 + 1.0) * (self.c0 - 1.0)


@dataclass(frozen=True)
class CaseLabel:
    tag: CaseTag
    magnus_convergent: bool | None   # None = unknown
    heat_sum_exists: bool


def classify(s: PrecessState) -> CaseLabel:
    b0, c0 = s.b0, s.c0
    sels = max(abs(b0), abs(c0)) < 1.0
    if abs(b0 + c0) <= DEADBAND:
        return CaseLabel(CaseTag.STATIONARY, True if sels else None, True)
    m = max(-1.0 - b0, c0 - 1.0)
    if abs(m) <= DEADBAND:
        return CaseLabel(CaseTag.SEMISTABLE, False, False)
    if m > 0:
        if abs(b0 + 1.0) <= DEADBAND or abs(c0 - 1.0) <= DEADBAND:
            tag = CaseTag.UNSTABLE_PARABOLIC
        elif (b0 + 1.0) * (c0 - 1.0) > 0:
            tag = CaseTag.UNSTABLE_HYPERBOLIC
        else:
            tag = CaseTag.UNSTABLE_ELLIPTIC
        return CaseLabel(tag, False, False)
    # stable: b0 > -1 and c0 < 1
    if sels:
        return CaseLabel(CaseTag.STABLE, True, True)
    # min(1-b0, c0+1) <= 0 exactly covers the rest of the stable wedge
    return CaseLabel(CaseTag.STABLE, False, True)


def ode_rhs(s: PrecessState, b: float, c: float):
    """b' = -2k(b+1)(b+c),  c' = 2k(c-1)(b+c)."""
    drift = b + c
    return (-2.0 * s.k * (b + 1.0) * drift, 2.0 * s.k * (c - 1.0) * drift)


def max_time(s: PrecessState) -> float:
    """Forward existence time of the matched trajectory (inf when global)."""
    b0, c0, k = s.b0, s.c0, s.k
    if abs(b0 + c0) <= DEADBAND:
        return math.inf
    Q = (b0 + 1.0) * (c0 - 1.0)
    if abs(b0 + 1.0) <= DEADBAND or abs(c0 - 1.0) <= DEADBAND:
        # parabolic rows 1/(2kt)
        if abs(c0 - 1.0) <= DEADBAND:
            t0 = 1.0 / (2.0 * k * (b0 + 1.0))
        else:
            t0 = 1.0 / (2.0 * k * (1.0 - c0))
        return math.inf if t0 > 0 else -t0
    sp = math.sqrt(abs(Q))
    r = b0 + 1.0
    if Q < 0:
        if r > 0:
            return math.inf
        theta0 = _atanh_like(r, sp)
        return -theta0 / (2.0 * k * sp)
    theta0 = math.atan(-(r) / sp) if r < 0 else math.atan(sp / r)
    return (0.5 * math.pi - theta0) / (2.0 * k * sp)


def _atanh_like(r, sp):
    """artanh(r/sp) when |r|<sp, artanh(sp/r) (= arcoth(r/sp)) when |r|>sp."""
    if abs(r) < sp:
        return math.atanh(r / sp)
    return math.atanh(sp / r)


def trajectory(s: PrecessState, t: float):
    """(b(t), c(t)) from the closed-form trajectory table, time-translated."""
    b0, c0, k = s.b0, s.c0, s.k
    if abs(b0 + c0) <= DEADBAND:
        return (b0, c0)
    tmax = max_time(s)
    if t >= tmax - DEADBAND:
        raise BlowupError(f"t={t} reaches the blow-up time {tmax}")
    Q = (b0 + 1.0) * (c0 - 1.0)
    if abs(b0 + 1.0) <= DEADBAND and abs(c0 - 1.0) > DEADBAND:
        # row (-1, 1 - 1/(2kt))
        t0 = 1.0 / (2.0 * k * (1.0 - c0))
        return (-1.0, 1.0 - 1.0 / (2.0 * k * (t0 + t)))
    if abs(c0 - 1.0) <= DEADBAND:
        # row (-1 + 1/(2kt), 1)
        t0 = 1.0 / (2.0 * k * (b0 + 1.0))
        return (-1.0 + 1.0 / (2.0 * k * (t0 + t)), 1.0)
    sp = math.sqrt(abs(Q))
    r = b0 + 1.0
    theta = 2.0 * k * sp * t
    if Q < 0:
        theta0 = _atanh_like(r, sp)
        arg = theta0 + theta
        if abs(r) < sp:
            return (-1.0 + sp * math.tanh(arg), 1.0 - sp / math.tanh(arg))
        return (-1.0 + sp / math.tanh(arg), 1.0 - sp * math.tanh(arg))
    if r < 0:
        theta0 = math.atan(-r / sp)
        arg = theta0 + theta
        return (-1.0 - sp * math.tan(arg), 1.0 - sp / math.tan(arg))
    theta0 = math.atan(sp / r)
    arg = theta0 + theta
    return (-1.0 + sp / math.tan(arg), 1.0 + sp * math.tan(arg))


def toe_closed_form(s: PrecessState) -> np.ndarray:
    """exp(pi (M + J)) exp(-pi J), the time-ordered exponential over [0, pi]."""
    return expm(math.pi * (s.matrix + J)) @ expm(-math.pi * J)


def is_real_exponential(A, tol: float = 1e-9) -> bool:
    """Whether A = exp(X) for some real 2x2 matrix X.

    True iff det A > 0 and either A has no real negative eigenvalue or A is a
    negative scalar multiple of the identity (the only way a negative double
    eigenvalue can be exponentiated, via a half-turn rotation block).
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("is_real_exponential is specific to 2x2 matrices")
    scale = max(np.abs(A).max(), 1e-30)
    if np.linalg.det(A) <= 0:
        return False
    # eigvals of a defective matrix split into a spurious conjugate pair at
    # O(sqrt(eps)), so decide real-vs-complex from the discriminant instead
    tr = float(np.trace(A))
    disc = tr * tr - 4.0 * float(np.linalg.det(A))
    if disc < -tol * scale * scale:
        return True  # genuine complex pair, no real eigenvalue at all
    if tr > 0:
        return True  # both real eigenvalues positive (det > 0)
    half_trace = 0.5 * tr
    return bool(half_trace < 0
                and np.abs(A - half_trace * np.eye(2)).max() <= tol * scale)


def boundary_flux_closed_form(s: PrecessState, t: float) -> np.ndarray:
    """B(t, 0) = diag(-2k/(1+4kt), 2k/(1+4kt)) for the case b0 = c0 = 1.

    The rotation ansatz that produces this closed form is invariant only in
    the rotation-normalized case, so a0 = 0 is required along with b0 = c0 = 1.
    """
    _require_semistable_corner(s)
    k = s.k
    diag = 2.0 * k / (1.0 + 4.0 * k * t)
    return np.array([[-diag, 0.0], [0.0, diag]])


def flux_conjugator_closed_form(s: PrecessState, tau: float) -> np.ndarray:
    """F_tau = diag((1+4k tau)^(-1/2), (1+4k tau)^(1/2))."""
    _require_semistable_corner(s)
    w = math.sqrt(1.0 + 4.0 * s.k * tau)
    return np.array([[1.0 / w, 0.0], [0.0, w]])


def flux_total_variation(s: PrecessState, T: float) -> float:
    """int_0^T ||B(t,0)|| dt = (1/2) log(1+4kT); diverges as T grows."""
    _require_semistable_corner(s)
    return 0.5 * math.log(1.0 + 4.0 * s.k * T)


FLUX_LEBESGUE_INTEGRABLE = False


def _require_semistable_corner(s):
    if abs(s.b0 - 1.0) > DEADBAND or abs(s.c0 - 1.0) > DEADBAND:
        raise ValueError("this closed form is for the case b0 = c0 = 1")
    if abs(s.a0) > DEADBAND:
        raise ValueError("the rotation-reduced closed forms need a0 = 0")


def heat_sum_principal_log(s: PrecessState) -> np.ndarray:
    """Principal log of the closed-form toe; valid when the predicate allows it."""
    A = toe_closed_form(s)
    if not is_real_exponential(A):
        raise ValueError("the toe has no real logarithm for this state")
    L = logm(A)
    return np.real_if_close(L, tol=1e6).astype(float)


def scaling_probe(s: PrecessState) -> float:
    """A tau in (0,1) scaling the unstable-elliptic state into hyperbolic/parabolic."""
    if not (s.b0 < -1.0 and s.c0 > 1.0):
        raise ValueError("scaling_probe needs the unstable elliptic domain")
    if abs(s.b0 + s.c0) <= DEADBAND:
        raise ValueError("the stationary diagonal b0 = -c0 is excluded")
    r1, r2 = sorted((-1.0 / s.b0, 1.0 / s.c0))
    tau = 0.5 * (r1 + r2)
    scaled = PrecessState(s.a0 * tau, s.b0 * tau, s.c0 * tau, s.k)
    tag = classify(scaled).tag
    if tag not in (CaseTag.UNSTABLE_HYPERBOLIC, CaseTag.UNSTABLE_PARABOLIC):
        raise AssertionError(f"probe landed in {tag}, not an unstable sign domain")
    return tau
