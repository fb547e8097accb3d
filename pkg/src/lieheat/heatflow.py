"""Explicit solver for the noncommutative heat equation on matrix-valued fields.

dA/dt = k d2A/dx2 + [A, k dA/dx] on a uniform cell-centered grid, RK4 in time
with second-order central differences; Neumann boundaries via mirror ghost
cells, periodic via wraparound.  Diffusion may be constant or graded on a
strictly-upper-triangular (nilpotent) algebra, where k acts superdiagonal by
superdiagonal.  run() integrates until the field homogenizes and collects the
mass diagnostics; on the circle it also accumulates the boundary-flux ordered
product that conjugates the time-ordered exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.linalg import expm

from .expansions import StepMeasure


class StabilityError(ValueError):
    pass


class NonConvergentFlowError(RuntimeError):
    pass


@dataclass(frozen=True)
class GradedDiffusion:
    """k(grade) = exp(-beta * grade) / m_star on superdiagonal grades."""
    m_star: float = 1.0
    beta: float = 0.0

    def k_of_grade(self, g: int) -> float:
        return math.exp(-self.beta * g) / self.m_star

    def entry_weights(self, dim: int) -> np.ndarray:
        w = np.zeros((dim, dim))
        for g in range(1, dim):
            for i in range(dim - g):
                w[i, i + g] = self.k_of_grade(g)
        return w

    def k_max(self, dim: int) -> float:
        return max(self.k_of_grade(g) for g in range(1, dim))


class Field:
    """Spatial grid of square matrices with boundary and diffusion metadata."""

    __slots__ = ("values", "bc", "length", "k_spec", "h", "x")

    def __init__(self, values, bc="neumann", length=1.0, k_spec=1.0):
        values = np.asarray(values, dtype=float)
        if values.ndim != 3 or values.shape[1] != values.shape[2]:
            raise ValueError("field values must have shape (n_x, d, d)")
        if values.shape[0] < 16:
            raise ValueError("need at least 16 cells")
        if bc not in ("neumann", "periodic"):
            raise ValueError("bc must be 'neumann' or 'periodic'")
        if isinstance(k_spec, GradedDiffusion):
            d = values.shape[1]
            if np.abs(np.tril(values, 0)).max() > 0:
                raise ValueError("graded diffusion needs strictly upper-triangular values")
        elif not float(k_spec) > 0:
            raise ValueError("k must be positive")
        self.values = values
        self.bc = bc
        self.length = float(length)
        self.k_spec = k_spec
        self.h = self.length / values.shape[0]
        self.x = (np.arange(values.shape[0]) + 0.5) * self.h

    @property
    def n_x(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]

    def k_max(self) -> float:
        if isinstance(self.k_spec, GradedDiffusion):
            return self.k_spec.k_max(self.dim)
        return float(self.k_spec)

    def apply_k(self, arr: np.ndarray) -> np.ndarray:
        if isinstance(self.k_spec, GradedDiffusion):
            return arr * self.k_spec.entry_weights(self.dim)[None, :, :]
        return self.k_spec * arr

    def replace_values(self, values) -> "Field":
        return Field(values, bc=self.bc, length=self.length, k_spec=self.k_spec)


def _extend(values, bc):
    if bc == "periodic":
        return np.concatenate([values[-1:], values, values[:1]], axis=0)
    return np.concatenate([values[:1], values, values[-1:]], axis=0)


def _rhs(values, field: Field):
    h = field.h
    ext = _extend(values, field.bc)
    dx = (ext[2:] - ext[:-2]) / (2.0 * h)
    dxx = (ext[2:] - 2.0 * values + ext[:-2]) / (h * h)
    B = field.apply_k(dx)
    return field.apply_k(dxx) + values @ B - B @ values


def step(f: Field, dt: float) -> Field:
    """One explicit RK4 step; dt must respect the h^2 stability limit."""
    if dt > 0.4 * f.h ** 2 / f.k_max() * (1 + 1e-12):
        raise StabilityError(
            f"dt={dt} exceeds the stability limit 0.4*h^2/k = {0.4 * f.h**2 / f.k_max()}")
    v = f.values
    k1 = _rhs(v, f)
    k2 = _rhs(v + 0.5 * dt * k1, f)
    k3 = _rhs(v + 0.5 * dt * k2, f)
    k4 = _rhs(v + dt * k3, f)
    return f.replace_values(v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def op_norm_cells(values: np.ndarray) -> np.ndarray:
    """Largest singular value per cell; closed form for 2x2, SVD otherwise."""
    if values.shape[1] == 2:
        fro2 = np.einsum("kij,kij->k", values, values)
        det = values[:, 0, 0] * values[:, 1, 1] - values[:, 0, 1] * values[:, 1, 0]
        gap = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
        return np.sqrt(np.maximum(0.5 * (fro2 + gap), 0.0))
    return np.linalg.svd(values, compute_uv=False)[:, 0]


def lie_mass(field_values: np.ndarray, h: float) -> float:
    """int ||A||_g dx with the doubled-operator-norm Banach-Lie convention."""
    return float(2.0 * h * op_norm_cells(field_values).sum())


def toe_spatial(f: Field) -> np.ndarray:
    """Ordered product of exp(A(x_j) h), leftmost factor at smallest x."""
    out = np.eye(f.dim)
    for j in range(f.n_x):
        out = out @ expm(f.values[j] * f.h)
    return out


def _interp_zero(arr):
    """Trig-free 4th-order midpoint interpolation of periodic cell data at x=0."""
    return (9.0 * (arr[0] + arr[-1]) - (arr[1] + arr[-2])) / 16.0


def _spectral_dx_periodic(values, length):
    n = values.shape[0]
    freq = np.fft.rfftfreq(n, d=length / n) * 2.0 * np.pi
    vhat = np.fft.rfft(values, axis=0)
    return np.fft.irfft(1j * freq[:, None, None] * vhat, n=n, axis=0)


def boundary_flux(f: Field) -> np.ndarray:
    """B(t, 0) = k dA/dx at x = 0 (periodic grids; spectral derivative)."""
    if f.bc != "periodic":
        raise ValueError("the boundary-flux conjugator lives on the periodic domain")
    dx = _spectral_dx_periodic(f.values, f.length)
    return f.apply_k(_interp_zero(dx))


@dataclass
class FlowDiagnostics:
    status: str                    # homogenized | max_time | diverged
    t_final: float
    M_I: float
    M_G: float
    H: np.ndarray                  # spatial integral of A at t_final
    toe_initial: np.ndarray
    toe_final: np.ndarray
    variation_final: float
    F: np.ndarray | None = None    # boundary-flux ordered product (periodic)
    blowup_time: float | None = None
    series: dict = dfield(default_factory=dict)
    x: np.ndarray | None = None
    values_initial: np.ndarray | None = None
    values_final: np.ndarray | None = None

    def to_json_dict(self):
        out = {
            "status": self.status,
            "t_final": self.t_final,
            "M_I": self.M_I,
            "M_G": self.M_G,
            "H": self.H.tolist(),
            "toe_initial": self.toe_initial.tolist(),
            "toe_final": self.toe_final.tolist(),
            "variation_final": self.variation_final,
        }
        if self.F is not None:
            out["F"] = self.F.tolist()
        if self.blowup_time is not None:
            out["blowup_time"] = self.blowup_time
        return out


def spatial_variation(values) -> float:
    return float((values.max(axis=0) - values.min(axis=0)).max())


def run(f0: Field, t_max: float | None = None, tol_homog: float = 1e-8,
        record_series: bool = False, blowup_factor: float = 1e3,
        check_every: int = 32, dt_factor: float = 0.25) -> FlowDiagnostics:
    """Integrate until spatial variation < tol_homog, t_max, or blow-up.

    Accumulates M_G = int int ||[A, k dA/dx]||_g dt dx by trapezoid on the
    diagnostic cadence and, on the periodic domain, the ordered product
    F_t = exp_R(B(., 0)) chunk by chunk.
    """
    kmax = f0.k_max()
    if t_max is None:
        t_max = 50.0 / kmax
    h = f0.h
    dt = dt_factor * h * h / kmax
    values = f0.values.copy()
    fwork = f0.replace_values(values)

    def mg_rate(vals):
        ext = _extend(vals, f0.bc)
        dx = (ext[2:] - ext[:-2]) / (2.0 * h)
        B = fwork.apply_k(dx)
        return lie_mass(vals @ B - B @ vals, h)

    M_I = lie_mass(values, h)
    toe0 = toe_spatial(f0)
    absmax0 = max(np.abs(values).max(), 1e-30)
    periodic = f0.bc == "periodic"
    F = np.eye(f0.dim) if periodic else None

    t = 0.0
    M_G = 0.0
    rate_prev = mg_rate(values)
    flux_prev = boundary_flux(fwork) if periodic else None
    series = {"t": [], "M_G": [], "variation": [], "H_norm": []} if record_series else None
    status = "max_time"
    blowup_time = None

    while t < t_max - 1e-15:
        chunk = min(check_every, max(1, int(math.ceil((t_max - t) / dt))))
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(chunk):
                f_new = step(fwork, dt)
                fwork = f_new
                t += dt
        values = fwork.values
        if not np.isfinite(values).all() or np.abs(values).max() > blowup_factor * absmax0:
            status = "diverged"
            blowup_time = t
            break
        rate_now = mg_rate(values)
        M_G += 0.5 * (rate_prev + rate_now) * (chunk * dt)
        rate_prev = rate_now
        if periodic:
            flux_now = boundary_flux(fwork)
            F = F @ expm(0.5 * (flux_prev + flux_now) * (chunk * dt))
            flux_prev = flux_now
        var = spatial_variation(values)
        if series is not None:
            series["t"].append(t)
            series["M_G"].append(M_G)
            series["variation"].append(var)
            series["H_norm"].append(float(np.linalg.norm(values.sum(axis=0) * h, 2)))
        if var < tol_homog:
            status = "homogenized"
            break

    if status == "diverged":
        nanmat = np.full((f0.dim, f0.dim), np.nan)
        H, toe_final, var_final = nanmat, nanmat, float("inf")
    else:
        H = values.sum(axis=0) * h
        toe_final = toe_spatial(fwork)
        var_final = spatial_variation(values)
    return FlowDiagnostics(
        status=status,
        t_final=t,
        M_I=M_I,
        M_G=M_G,
        H=H,
        toe_initial=toe0,
        toe_final=toe_final,
        variation_final=var_final,
        F=F,
        blowup_time=blowup_time,
        series={k: np.asarray(v) for k, v in series.items()} if series else {},
        x=f0.x,
        values_initial=f0.values,
        values_final=values,
    )


def heat_sum_periodic(f0: Field, t_max: float | None = None,
                      tol_homog: float = 1e-10):
    """F H F^{-1} for a convergent periodic flow; exp of it equals the toe."""
    if f0.bc != "periodic":
        raise ValueError("heat_sum_periodic needs the periodic domain")
    diag = run(f0, t_max=t_max, tol_homog=tol_homog)
    if diag.status != "homogenized":
        raise NonConvergentFlowError(f"flow did not homogenize: {diag.status}")
    return diag.F @ diag.H @ np.linalg.inv(diag.F), diag


# -- initial conditions -------------------------------------------------------


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def precessing_field(n_x: int, a0: float, b0: float, c0: float, k: float = 1.0) -> Field:
    """The precessing measure mapped from R/(pi Z) to the unit circle.

    A(x) = pi R(pi x) M R(-pi x) on x in [0,1); solver time relates to the
    case-study time by t_study = pi^2 * t_solver.
    """
    h = 1.0 / n_x
    x = (np.arange(n_x) + 0.5) * h
    M = np.array([[a0, c0], [b0, -a0]])
    vals = np.empty((n_x, 2, 2))
    for j, xj in enumerate(x):
        R = rotation(math.pi * xj)
        vals[j] = math.pi * (R @ M @ R.T)
    return Field(vals, bc="periodic", length=1.0, k_spec=k)


TIME_SCALE_PRECESSING = math.pi ** 2


def extract_precessing(f: Field):
    """Invert the precessing ansatz: mean of R(-pi x) A R(pi x) / pi.

    Returns (a, b, c, spread) where spread measures departure from the ansatz.
    """
    mats = np.empty_like(f.values)
    for j, xj in enumerate(f.x):
        R = rotation(math.pi * xj)
        mats[j] = (R.T @ f.values[j] @ R) / math.pi
    mean = mats.mean(axis=0)
    spread = np.abs(mats - mean).max()
    return mean[0, 0], mean[1, 0], mean[0, 1], spread


def measure_field(n_x: int, measure: StepMeasure, bc="neumann", length=1.0,
                  k_spec=1.0) -> Field:
    """Piecewise-constant field from a numeric StepMeasure laid over [0, length].

    The measure is rescaled to fill the domain; values are scaled inversely so
    the total mass (value * length sums) is preserved.
    """
    if measure.formal:
        raise ValueError("measure_field needs a numeric measure")
    total = measure.total_length()
    d = measure.dim
    vals = np.zeros((n_x, d, d))
    h = length / n_x
    edges = np.cumsum([0.0] + [l for _, l in measure.atoms]) / total * length
    scale = total / length
    for j in range(n_x):
        xj = (j + 0.5) * h
        idx = int(np.searchsorted(edges, xj, side="right")) - 1
        idx = min(max(idx, 0), len(measure.atoms) - 1)
        vals[j] = measure.atoms[idx][0] * scale
    return Field(vals, bc=bc, length=length, k_spec=k_spec)


def two_bump_field(n_x: int, mass_lie: float, k: float = 1.0,
                   bc: str = "neumann") -> Field:
    """Smooth noncommuting two-bump data on [0,1], scaled to a target M_I."""
    h = 1.0 / n_x
    x = (np.arange(n_x) + 0.5) * h
    P = np.array([[0.0, 1.0], [0.0, 0.0]])
    Q = np.array([[0.0, 0.0], [1.0, 0.0]])
    f1 = np.exp(-((x - 0.35) / 0.12) ** 2)
    f2 = np.exp(-((x - 0.65) / 0.12) ** 2)
    vals = f1[:, None, None] * P + f2[:, None, None] * Q
    vals *= mass_lie / lie_mass(vals, h)
    return Field(vals, bc=bc, length=1.0, k_spec=k)


def zero_field(n_x: int, dim: int = 2, bc="neumann", length=1.0, k_spec=1.0) -> Field:
    return Field(np.zeros((n_x, dim, dim)), bc=bc, length=length, k_spec=k_spec)


# -- multiplicative-form cross-check ------------------------------------------


def multiplicative_flow_check(f0: Field, t_end: float, dt_factor: float = 0.25):
    """Evolve g by dg/dt = k g_xx - k g_x g^{-1} g_x and compare A = g^{-1} g_x.

    g lives on the n_x+1 grid nodes with both ends pinned (the invariance of
    the endpoints); the measured A is compared against the direct A-flow at
    the interior nodes.  Returns the max absolute deviation at t_end.
    """
    if f0.bc != "neumann" or isinstance(f0.k_spec, GradedDiffusion):
        raise ValueError("the multiplicative cross-check runs on Neumann [0,1], constant k")
    k = float(f0.k_spec)
    n, d, h = f0.n_x, f0.dim, f0.h
    g = np.empty((n + 1, d, d))
    g[0] = np.eye(d)
    for j in range(n):
        g[j + 1] = g[j] @ expm(f0.values[j] * h)

    def g_rhs(gv):
        gx = np.zeros_like(gv)
        gxx = np.zeros_like(gv)
        gx[1:-1] = (gv[2:] - gv[:-2]) / (2.0 * h)
        gxx[1:-1] = (gv[2:] - 2.0 * gv[1:-1] + gv[:-2]) / (h * h)
        rhs = k * gxx - k * gx @ np.linalg.inv(gv) @ gx
        rhs[0] = 0.0
        rhs[-1] = 0.0
        return rhs

    dt = dt_factor * h * h / k
    steps = int(math.ceil(t_end / dt))
    dt = t_end / steps
    fa = f0
    for _ in range(steps):
        k1 = g_rhs(g)
        k2 = g_rhs(g + 0.5 * dt * k1)
        k3 = g_rhs(g + 0.5 * dt * k2)
        k4 = g_rhs(g + dt * k3)
        g = g + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        fa = step(fa, dt)

    a_mult = np.linalg.inv(g[1:-1]) @ ((g[2:] - g[:-2]) / (2.0 * h))
    a_node = 0.5 * (fa.values[:-1] + fa.values[1:])  # interpolate centers to nodes
    return float(np.abs(a_mult - a_node).max())


# The graded Picard layer of this module lives in picard.py; re-exported here.
from .picard import PicardResult, beta_sweep, picard_series  # noqa: E402,F401
