"""Time-ordered exponentials of step measures and the five Lie-series factorizations.

A StepMeasure is an ordered list of (value, length) atoms.  In formal mode the
values are generator indices and everything is exact; in numeric mode they are
square real matrices.  The five expansions (Magnus, left/right Wilcox, and the
two symmetric Wilcox variants) are extracted degree by degree from the formal
time-ordered exponential by stripping the already-known exponential factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import reduce

import numpy as np

from . import majorants
from .freealg import (
    ConstantTermError,
    FreeAlgebraError,
    FreeSeries,
    exp,
    exp_single,
    log,
    rational,
)


class ExpansionKind(Enum):
    MAGNUS = "magnus"
    WILCOX_LEFT = "wilcox-left"
    WILCOX_RIGHT = "wilcox-right"
    SYM_INWARD = "sym-in"
    SYM_OUTWARD = "sym-out"

    @classmethod
    def from_string(cls, name: str) -> "ExpansionKind":
        key = name.strip().lower().replace("_", "-")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown expansion kind {name!r}; choose from "
                         f"{[k.value for k in cls]}")


class MeasureModeError(FreeAlgebraError):
    """Formal operation applied to a numeric measure, or vice versa."""


class StepMeasure:
    """Ordered piecewise-constant measure: atoms of (value, length).

    Formal mode: values are 0-based generator indices, lengths exact rationals.
    Numeric mode: values are square real matrices, lengths positive floats.
    """

    __slots__ = ("atoms", "formal")

    def __init__(self, atoms):
        atoms = tuple((v, l) for v, l in atoms)
        if not atoms:
            raise ValueError("a StepMeasure needs at least one atom")
        first_formal = isinstance(atoms[0][0], (int, np.integer))
        for v, l in atoms:
            if isinstance(v, (int, np.integer)) != first_formal:
                raise MeasureModeError("cannot mix generator-index and matrix atoms")
            if first_formal:
                if v < 0:
                    raise ValueError("generator indices are 0-based and nonnegative")
                if rational(l) <= 0:
                    raise ValueError("atom lengths must be strictly positive")
            else:
                v = np.asarray(v, dtype=float)
                if v.ndim != 2 or v.shape[0] != v.shape[1]:
                    raise ValueError("numeric atoms must be square matrices")
                if not float(l) > 0:
                    raise ValueError("atom lengths must be strictly positive")
        if first_formal:
            self.atoms = tuple((int(v), rational(l)) for v, l in atoms)
        else:
            self.atoms = tuple((np.asarray(v, dtype=float), float(l)) for v, l in atoms)
        self.formal = first_formal

    def __len__(self):
        return len(self.atoms)

    @property
    def ngens(self) -> int:
        if not self.formal:
            raise MeasureModeError("ngens is only defined for formal measures")
        return max(v for v, _ in self.atoms) + 1

    @property
    def dim(self) -> int:
        if self.formal:
            raise MeasureModeError("dim is only defined for numeric measures")
        return self.atoms[0][0].shape[0]

    def total_length(self):
        return sum(l for _, l in self.atoms)

    def scaled(self, s) -> "StepMeasure":
        """Scale every atom length by s (rational in formal mode)."""
        if self.formal:
            s = rational(s)
        return StepMeasure([(v, l * s) for v, l in self.atoms])

    def cumulative_mass(self, norm="lie") -> float:
        """Total variation sum ||atom|| * length in the chosen matrix norm."""
        if self.formal:
            raise MeasureModeError("cumulative matrix mass needs a numeric measure")
        nf = banach_lie_norm if norm == "lie" else operator_norm
        return float(sum(nf(v) * l for v, l in self.atoms))

    def weights(self):
        """Numeric atom weights value*length (the point-mass picture)."""
        if self.formal:
            raise MeasureModeError("weights need a numeric measure")
        return [v * l for v, l in self.atoms]


def toe_formal(m: StepMeasure, dmax: int, ngens: int | None = None) -> FreeSeries:
    """exp(l_1 X_{a_1}) ... exp(l_k X_{a_k}), earliest atom leftmost."""
    if not m.formal:
        raise MeasureModeError("toe_formal needs a formal measure")
    n = ngens if ngens is not None else m.ngens
    out = FreeSeries.one(n, dmax)
    for g, l in m.atoms:
        out = out * exp_single(g, l, n, dmax)
    return out


def _strip_terms(E: FreeSeries, kind: ExpansionKind, dmax: int):
    """Degree-by-degree unicity recursion; terms[n] is homogeneous of degree n."""
    terms = [FreeSeries.zero(E.ngens, E.dmax)]
    if kind is ExpansionKind.MAGNUS:
        L = log(E)
        terms += [L.degree_part(n) for n in range(1, dmax + 1)]
        return terms
    half = rational(-1, 2)
    if kind is ExpansionKind.SYM_OUTWARD:
        one = FreeSeries.one(E.ngens, E.dmax)
        left_inv, right_inv = one, one
        for i in range(1, dmax + 1):
            residual = (left_inv * E) * right_inv if i > 1 else E
            t = log(residual).degree_part(i)
            terms.append(t)
            if i < dmax:
                h = exp(t.scale(half))
                left_inv = left_inv * h
                right_inv = h * right_inv
        return terms
    residual = E
    for i in range(1, dmax + 1):
        t = log(residual).degree_part(i)
        terms.append(t)
        if i == dmax:
            break
        if kind is ExpansionKind.WILCOX_LEFT:
            residual = residual * exp(-t)
        elif kind is ExpansionKind.WILCOX_RIGHT:
            residual = exp(-t) * residual
        else:  # SYM_INWARD
            h = exp(t.scale(half))
            residual = (h * residual) * h
    return terms


def expansion_terms(m: StepMeasure, kind: ExpansionKind, dmax: int,
                    ngens: int | None = None):
    """List with the degree-n term at index n (index 0 is the zero series)."""
    E = toe_formal(m, dmax, ngens)
    return _strip_terms(E, kind, dmax)


def refactor_product(terms, kind: ExpansionKind) -> FreeSeries:
    """Re-multiply the factorization belonging to `kind` from its terms."""
    zero = terms[0]
    one = FreeSeries.one(zero.ngens, zero.dmax)
    dmax = len(terms) - 1
    half = rational(1, 2)
    if kind is ExpansionKind.MAGNUS:
        return exp(reduce(lambda a, b: a + b, terms[1:], zero))
    if kind is ExpansionKind.WILCOX_LEFT:
        out = one
        for i in range(dmax, 0, -1):
            out = out * exp(terms[i])
        return out
    if kind is ExpansionKind.WILCOX_RIGHT:
        out = one
        for i in range(1, dmax + 1):
            out = out * exp(terms[i])
        return out
    halves = [exp(terms[i].scale(half)) for i in range(1, dmax + 1)]
    if kind is ExpansionKind.SYM_INWARD:
        left = reduce(lambda a, b: a * b, halves, one)
        right = reduce(lambda a, b: a * b, reversed(halves), one)
    else:  # SYM_OUTWARD
        left = reduce(lambda a, b: a * b, reversed(halves), one)
        right = reduce(lambda a, b: a * b, halves, one)
    return left * right


def refactor_check(m: StepMeasure, kind: ExpansionKind, dmax: int,
                   terms=None) -> bool:
    """Exact identity: the ordered factor product reproduces the toe."""
    E = toe_formal(m, dmax)
    if terms is None:
        terms = _strip_terms(E, kind, dmax)
    return refactor_product(terms, kind) == E


# -- numeric evaluation ------------------------------------------------------


def eval_matrix(term: FreeSeries, assignment) -> np.ndarray:
    """Substitute matrices for generators; exact coefficients go to float."""
    if isinstance(assignment, (list, tuple)):
        assignment = dict(enumerate(assignment))
    mats = {g: np.asarray(M, dtype=float) for g, M in assignment.items()}
    dims = {M.shape for M in mats.values()}
    if len(dims) != 1 or any(s[0] != s[1] for s in dims):
        raise ValueError("assigned matrices must all be square of one dimension")
    d = next(iter(dims))[0]
    eye = np.eye(d)
    out = np.zeros((d, d))
    for word, c in term.terms():
        prod = eye
        for g in word:
            if g not in mats:
                raise KeyError(f"generator {g} has no assigned matrix")
            prod = prod @ mats[g]
        out = out + float(c) * prod
    return out


def operator_norm(X) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(X, dtype=float), 2))


def banach_lie_norm(X) -> float:
    """Doubled operator norm; submultiplicative under commutators."""
    return 2.0 * operator_norm(X)


@dataclass(frozen=True)
class DominationRow:
    degree: int
    lie_norm: float          # ||term_n||_g
    majorant: float          # g_n * M^n
    dominated: bool
    op_norm: float           # ||term_n|| (plain operator norm)
    moan_oteo: float         # (1/2^(n-1)) * (int |phi|)^n
    moan_oteo_ok: bool

    def to_json_dict(self):
        return {
            "degree": self.degree,
            "norm_g": self.lie_norm,
            "majorant": self.majorant,
            "dominated": self.dominated,
            "norm_op": self.op_norm,
            "moan_oteo": self.moan_oteo,
            "moan_oteo_ok": self.moan_oteo_ok,
        }


@dataclass
class DominationReport:
    kind: ExpansionKind
    mass_lie: float
    mass_op: float
    rows: list = field(default_factory=list)

    @property
    def all_dominated(self):
        return all(r.dominated for r in self.rows)

    @property
    def all_moan_oteo(self):
        return all(r.moan_oteo_ok for r in self.rows)

    def to_json_dict(self):
        return {
            "kind": self.kind.value,
            "mass_lie": self.mass_lie,
            "mass_op": self.mass_op,
            "rows": [r.to_json_dict() for r in self.rows],
        }


def numeric_terms(m: StepMeasure, kind: ExpansionKind, nmax: int):
    """Expansion terms of a numeric measure, via exact formal terms.

    The measure (V_i, l_i) has the same time-ordered exponential as the
    unit-length measure with values l_i V_i, so lengths are absorbed into
    the evaluated matrices and the formal layer stays exact.
    """
    if m.formal:
        raise MeasureModeError("numeric_terms needs a numeric measure")
    proxy = StepMeasure([(i, 1) for i in range(len(m))])
    terms = expansion_terms(proxy, kind, nmax)
    weights = m.weights()
    return [eval_matrix(t, weights) for t in terms]


def domination_check(m: StepMeasure, kind: ExpansionKind,
                     majorant: "majorants.MajorantSpec", nmax: int) -> DominationReport:
    """Per-degree norms against the majorant coefficients and Moan-Oteo."""
    if m.formal:
        raise MeasureModeError("domination_check needs a numeric measure")
    mass_lie = m.cumulative_mass("lie")
    mass_op = m.cumulative_mass("op")
    coeffs = majorants.series_coeffs(majorant, nmax)
    evaluated = numeric_terms(m, kind, nmax)
    report = DominationReport(kind=kind, mass_lie=mass_lie, mass_op=mass_op)
    for n in range(1, nmax + 1):
        lie_n = banach_lie_norm(evaluated[n])
        op_n = operator_norm(evaluated[n])
        bound_g = float(coeffs[n]) * mass_lie ** n
        bound_mo = mass_op ** n / 2.0 ** (n - 1)
        report.rows.append(DominationRow(
            degree=n,
            lie_norm=lie_n,
            majorant=bound_g,
            dominated=lie_n <= bound_g * (1 + 1e-12) + 1e-300,
            op_norm=op_n,
            moan_oteo=bound_mo,
            moan_oteo_ok=op_n <= bound_mo * (1 + 1e-12) + 1e-300,
        ))
    return report
