"""Named invariant checks behind the `verify` subcommand.

Each check is a zero-argument callable returning a dict with an "ok" flag and
whatever detail is useful in the report.  Suites are deliberately fast and
deterministic (fixed seeds); the heavyweight end-to-end experiments live in
the acceptance tests.
"""

from __future__ import annotations

import math
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import expansions as ex
from . import freealg as fa
from . import heatflow as hf
from . import kernels as kn
from . import majorants as mj
from . import picard as pc
from . import precessing as pr
from .freealg import FreeSeries, bracket, rational as q


def _gen(i, n, d):
    return FreeSeries.generator(i, n, d)


def _rand_series(rng, ngens, dmax, nterms, zero_const=False, unit_const=False):
    s = FreeSeries(ngens, dmax)
    terms = {}
    for _ in range(nterms):
        deg = rng.randint(1 if (zero_const or unit_const) else 0, dmax)
        word = tuple(rng.randrange(ngens) for _ in range(deg))
        terms[word] = terms.get(word, 0) + q(rng.randint(-6, 6), rng.randint(1, 6))
    s = FreeSeries(ngens, dmax, terms)
    if unit_const:
        s = s - FreeSeries(ngens, dmax, {(): s.coeff(())}) + FreeSeries.one(ngens, dmax)
    return s


def _rand_measure(rng, max_atoms=4, max_gens=4):
    n = rng.randint(1, max_atoms)
    return ex.StepMeasure([(rng.randrange(max_gens), q(rng.randint(1, 4), rng.randint(1, 4)))
                           for _ in range(n)])


# -- freealg -------------------------------------------------------------------


def check_ring_axioms():
    rng = random.Random(101)
    ok = True
    for _ in range(8):
        a = _rand_series(rng, 3, 5, 6)
        b = _rand_series(rng, 3, 5, 6)
        c = _rand_series(rng, 3, 5, 6)
        ok &= (a * b) * c == a * (b * c)
        ok &= a * (b + c) == a * b + a * c
        ok &= (a + b) * c == a * c + b * c
    return {"ok": ok}


def check_exp_log_inverse():
    rng = random.Random(55)
    ok = True
    for _ in range(4):
        a = _rand_series(rng, 2, 6, 5, zero_const=True)
        ok &= fa.log(fa.exp(a)) == a
        b = _rand_series(rng, 2, 6, 5, unit_const=True)
        ok &= fa.exp(fa.log(b)) == b
    return {"ok": ok}


def check_dynkin_witnesses():
    X, Y = _gen(0, 2, 4), _gen(1, 2, 4)
    lie = bracket(X, bracket(X, Y)) + bracket(X, Y).scale(q(3, 7))
    notlie = X * Y
    return {"ok": fa.dynkin_is_lie(lie) and not fa.dynkin_is_lie(notlie)}


def check_truncation_consistency():
    rng = random.Random(7)
    a = _rand_series(rng, 2, 6, 6, zero_const=True)
    b = _rand_series(rng, 2, 6, 6, zero_const=True)
    full = (fa.exp(a) * fa.exp(b)).truncate(4)
    short = fa.exp(a.truncate(4)) * fa.exp(b.truncate(4))
    return {"ok": full == short}


def check_serialization_roundtrip():
    rng = random.Random(9)
    a = _rand_series(rng, 3, 5, 8)
    return {"ok": FreeSeries.from_json(a.to_json()) == a}


# -- expansions ----------------------------------------------------------------


def _table_mu3(g):
    return (bracket(bracket(g[0], g[1]), g[2])
            + bracket(g[0], bracket(g[1], g[2]))).scale(q(1, 6))


def check_low_degree_tables():
    ok = True
    # mu_1..mu_3
    m = ex.StepMeasure([(i, 1) for i in range(3)])
    t = ex.expansion_terms(m, ex.ExpansionKind.MAGNUS, 3)
    g = [_gen(i, 3, 3) for i in range(3)]
    ok &= fa.multilinear_part(t[1], [0]) == g[0]
    ok &= fa.multilinear_part(t[2], [0, 1]) == bracket(g[0], g[1]).scale(q(1, 2))
    ok &= fa.multilinear_part(t[3], [0, 1, 2]) == _table_mu3(g)
    # zeta_left_3
    t = ex.expansion_terms(m, ex.ExpansionKind.WILCOX_LEFT, 3)
    z3 = (bracket(g[1], bracket(g[0], g[2]))
          + bracket(g[0], bracket(g[1], g[2]))).scale(q(1, 3))
    ok &= fa.multilinear_part(t[3], [0, 1, 2]) == z3
    # eta_inward_4
    m4 = ex.StepMeasure([(i, 1) for i in range(4)])
    t = ex.expansion_terms(m4, ex.ExpansionKind.SYM_INWARD, 4)
    g4 = [_gen(i, 4, 4) for i in range(4)]
    e4 = (bracket(bracket(bracket(g4[0], g4[1]), g4[2]), g4[3])
          + bracket(g4[0], bracket(g4[1], bracket(g4[2], g4[3])))).scale(q(1, 8))
    ok &= fa.multilinear_part(t[4], [0, 1, 2, 3]) == e4
    return {"ok": ok}


def check_refactor_all_kinds():
    rng = random.Random(23)
    ok = True
    for _ in range(3):
        m = _rand_measure(rng)
        E = ex.toe_formal(m, 5)
        for kind in ex.ExpansionKind:
            terms = ex.expansion_terms(m, kind, 5)
            ok &= ex.refactor_product(terms, kind) == E
            ok &= all(fa.dynkin_is_lie(t) for t in terms[1:])
            deg1 = terms[1]
            expect1 = FreeSeries(E.ngens, E.dmax)
            for gidx, length in m.atoms:
                expect1 = expect1 + FreeSeries.generator(gidx, E.ngens, E.dmax).scale(length)
            ok &= deg1 == expect1
    return {"ok": ok}


def check_scaling_equivariance():
    rng = random.Random(31)
    m = _rand_measure(rng, max_atoms=3, max_gens=3)
    s = q(3, 2)
    t1 = ex.expansion_terms(m, ex.ExpansionKind.MAGNUS, 4)
    t2 = ex.expansion_terms(m.scaled(s), ex.ExpansionKind.MAGNUS, 4)
    ok = all(t1[n].scale(s ** n) == t2[n] for n in range(1, 5))
    return {"ok": ok}


def check_domination_magnus():
    rng = np.random.default_rng(3)
    spec = mj.majorant_spec("magnus_heat")
    ok = True
    worst = 0.0
    for _ in range(4):
        mats = [rng.normal(size=(2, 2)) for _ in range(2)]
        lengths = rng.uniform(0.3, 1.0, size=2)
        m = ex.StepMeasure(list(zip(mats, lengths)))
        m = m.scaled(0.5 / m.cumulative_mass("lie"))
        rep = ex.domination_check(m, ex.ExpansionKind.MAGNUS, spec, 6)
        ok &= rep.all_dominated and rep.all_moan_oteo
        worst = max(worst, max(r.lie_norm / r.majorant for r in rep.rows))
    return {"ok": ok, "worst_ratio": worst}


# -- majorants -------------------------------------------------------------------


def check_majorant_radii():
    expected = {
        "magnus_heat": 1.0,
        "wilcox_halfline": 2.0 - math.sqrt(2.0),
        "wilcox_improved": 2.0 / 3.0,
        "sym_outward_improved": 4.0 - 2.0 * math.sqrt(2.0),
        "magnus_periodic_improved": 4.0 - 2.0 * math.sqrt(2.0),
    }
    errs = {name: abs(mj.radius(mj.majorant_spec(name)) - r)
            for name, r in expected.items()}
    return {"ok": max(errs.values()) < 1e-12, "errors": errs}


def check_series_vs_closed_form():
    ok = True
    worst = 0.0
    for name in ("magnus_heat", "wilcox_halfline", "wilcox_improved",
                 "sym_outward_improved", "magnus_periodic_improved"):
        spec = mj.majorant_spec(name)
        x = 0.9 * mj.radius(spec)
        err = abs(mj.partial_sum(spec, x, 400) - mj.closed_form(spec, x))
        worst = max(worst, err)
        ok &= err < 1e-10
    return {"ok": ok, "worst": worst}


def check_majorant_ordering():
    a = mj.series_coeffs(mj.majorant_spec("magnus_heat"), 20)
    b = mj.series_coeffs(mj.majorant_spec("sym_outward_improved"), 20)
    return {"ok": all(x >= y for x, y in zip(a[1:], b[1:]))}


def check_divergence_beyond_radius():
    spec = mj.majorant_spec("magnus_heat")
    r = mj.radius(spec)
    branch_value = mj.closed_form(spec, r)
    s = mj.partial_sum(spec, 1.05 * r, 200)
    return {"ok": s > branch_value, "partial": s, "branch": branch_value}


# -- kernels ---------------------------------------------------------------------


def check_kernel_conservation():
    p = kn.KernelParams(k=0.7)
    worst = 0.0
    for d in kn.Domain:
        for (x, t) in ((0.37, 0.05), (0.8, 0.31)):
            xx = x if d is not kn.Domain.LINE else x - 1.0
            worst = max(worst, kn.mass_conservation_residual(d, xx, t, p))
    return {"ok": worst < 1e-10, "worst": worst}


def check_kernel_semigroup():
    p = kn.KernelParams(k=1.3)
    worst = 0.0
    for d in kn.Domain:
        x, y = (0.3, 0.62) if d is not kn.Domain.LINE else (-0.4, 0.9)
        worst = max(worst, kn.semigroup_residual(d, x, y, 0.08, 0.11, p))
    return {"ok": worst < 1e-9, "worst": worst}


def check_theta_forms():
    rng = random.Random(3)
    pts = [(rng.uniform(-4, 4), rng.uniform(0, 0.99)) for _ in range(100)]
    worst_tp = max(abs(kn.theta3(z, qq) - kn.theta3_product(z, qq)) for z, qq in pts)
    # theta vs raw image sum
    p = kn.KernelParams(k=1.0)
    worst_img = 0.0
    for kt in (0.02, 0.05, 0.1, 0.3, 1.0):
        t = kt / p.k
        v = 2 * p.k * t
        img = sum(math.exp(-(0.29 - pp) ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
                  for pp in range(-80, 81))
        worst_img = max(worst_img, abs(img - kn.theta3(math.pi * 0.29,
                                                       math.exp(-4 * math.pi ** 2 * p.k * t))))
    return {"ok": worst_tp < 1e-13 and worst_img < 1e-13,
            "worst_triple_product": worst_tp, "worst_image": worst_img}


def check_pair_mass_line():
    err1 = abs(kn.pair_mass_line_quadrature(-0.3, 0.5, 1.3, 0.6) - 0.5)
    err2 = abs(kn.pair_mass_line_quadrature(0.1, 0.9, 2.0, 0.4, form="time") - 0.5)
    return {"ok": err1 < 1e-8 and err2 < 1e-8, "space": err1, "time": err2}


def check_pair_mass_halfline():
    an = kn.pair_mass_halfline(0.2, 0.9, 1.0, 1.0)
    qd = kn.pair_mass_halfline_quadrature(0.2, 0.9, 1.0, 1.0)
    err_eq = abs(an.total - 0.5)
    err_qd = max(abs(an.direct - qd.direct), abs(an.reflected - qd.reflected))
    an2 = kn.pair_mass_halfline(0.3, 0.8, 0.4, 2.5)
    qd2 = kn.pair_mass_halfline_quadrature(0.3, 0.8, 0.4, 2.5)
    err_qd2 = max(abs(an2.direct - qd2.direct), abs(an2.reflected - qd2.reflected))
    return {"ok": err_eq < 1e-8 and err_qd < 1e-7 and err_qd2 < 1e-7
            and an2.variation_bound <= 1.0,
            "equal_mass": err_eq, "quad": max(err_qd, err_qd2)}


def check_pair_mass_circle():
    y = 0.15
    net = kn.pair_mass_circle(-y, y).net_coefficient
    err_net = abs(net - (0.5 - 2 * y))
    flux = kn.s_plus_time_integral(0.2, 1e8, 1.0)
    err_flux = abs(flux - (0.5 - 0.2))
    err_quad = abs(kn.s_plus_time_integral_quadrature(0.2, 3.0, 1.0)
                   - kn.s_plus_time_integral(0.2, 3.0, 1.0))
    # continuity limit toward the line case
    err_cont = abs(kn.pair_mass_circle(0.4, 0.4 + 1e-9).net_coefficient - 0.5)
    return {"ok": err_net < 1e-12 and err_flux < 1e-8 and err_quad < 1e-8
            and err_cont < 1e-8,
            "net": err_net, "flux": err_flux, "quad": err_quad}


def check_splus_positivity_and_monotone():
    p = kn.KernelParams(k=0.9)
    ok = all(kn.s_plus(y, t, 2.0) > 0
             for y in np.linspace(0.01, 0.24, 12) for t in (0.02, 0.1, 0.7))
    rng = random.Random(12)
    for _ in range(1000):
        t = rng.uniform(0.01, 0.6)
        d1, d2 = sorted((rng.uniform(0, 0.5), rng.uniform(0, 0.5)))
        ok &= (kn.kernel(kn.Domain.CIRCLE, d1, 0.0, t, p)
               >= kn.kernel(kn.Domain.CIRCLE, d2, 0.0, t, p) - 1e-14)
    return {"ok": ok}


# -- heatflow --------------------------------------------------------------------


def check_flow_basics():
    C = np.array([[0.1, 0.3], [0.2, -0.1]])
    f = hf.Field(np.tile(C, (32, 1, 1)), bc="neumann")
    drift = np.abs(hf.step(f, 0.2 * f.h ** 2).values - f.values).max()
    toe_const = np.abs(hf.toe_spatial(f) - _expm(C)).max()
    toe_zero = np.abs(hf.toe_spatial(hf.zero_field(32)) - np.eye(2)).max()
    return {"ok": drift == 0.0 and toe_const < 1e-10 and toe_zero == 0.0}


def _expm(M):
    from scipy.linalg import expm
    return expm(M)


def check_commuting_reduction():
    n, k = 256, 0.8
    h = 1.0 / n
    x = (np.arange(n) + 0.5) * h
    C = np.array([[0.0, 1.0], [0.0, 0.0]])
    f = hf.Field((0.3 + 0.2 * np.cos(math.pi * x))[:, None, None] * C,
                 bc="neumann", k_spec=k)
    t_end, dt = 0.05, 0.25 * h * h / k
    steps = int(round(t_end / dt))
    for _ in range(steps):
        f = hf.step(f, dt)
    exact = 0.3 + 0.2 * math.exp(-k * math.pi ** 2 * steps * dt) * np.cos(math.pi * x)
    err = np.abs(f.values[:, 0, 1] - exact).max()
    return {"ok": err < 1e-6, "err": err}


def check_toe_conservation_neumann():
    f = hf.two_bump_field(64, 0.5)
    d = hf.run(f, t_max=1.0, tol_homog=1e-7)
    drift = np.abs(d.toe_final - d.toe_initial).max()
    return {"ok": drift < 1e-4, "drift": drift, "status": d.status}


def check_grid_convergence():
    drifts = []
    for n in (64, 128):
        f = hf.two_bump_field(n, 0.5)
        d = hf.run(f, t_max=0.15, tol_homog=0.0)
        drifts.append(np.abs(d.toe_final - d.toe_initial).max())
    factor = drifts[0] / drifts[1]
    return {"ok": 2.5 < factor < 6.5, "factor": factor}


def check_multiplicative_form():
    f = hf.two_bump_field(128, 0.6)
    err = hf.multiplicative_flow_check(f, 0.02)
    return {"ok": err < 1e-4, "err": err}


def check_picard_magnus_anchor():
    rng = np.random.default_rng(42)
    W = []
    for _ in range(2):
        M = np.zeros((4, 4))
        for i in range(3):
            M[i, i + 1] = rng.normal() * 0.6
        W.append(M)
    m = ex.StepMeasure([(W[0], 1.0), (W[1], 1.0)])
    mu = pc.expansion_targets(m, ex.ExpansionKind.MAGNUS, 3)
    errs = {}
    fine = {"n_x": 160, "n_s": 56, "n_main": 72, "n_tail": 28}
    for dom in (kn.Domain.LINE, kn.Domain.HALFLINE, kn.Domain.INTERVAL01):
        kw = fine if dom is kn.Domain.HALFLINE else {}
        if dom is kn.Domain.INTERVAL01:
            r = pc.picard_series(m, dom, 0.0, 3, n_x=256)
            h2 = float(np.linalg.norm(r.H[1] - mu[2], 2))
            h3 = float(np.linalg.norm(r.H[2] - mu[3], 2))
        else:
            r = pc.picard_series(m, dom, 0.0, 3, **kw)
            h2 = float(np.linalg.norm(r.H[1] - mu[2], 2))
            h3 = float(np.linalg.norm(r.H[2] - mu[3], 2))
        errs[dom.value] = max(h2, h3)
    return {"ok": max(errs.values()) < 1e-6, "errors": errs}


def check_picard_pair_mass():
    # two delta-like atoms on the line: order-2 net coefficient 1/2
    W1 = np.zeros((3, 3)); W1[0, 1] = 1.0
    W2 = np.zeros((3, 3)); W2[1, 2] = 1.0
    m = ex.StepMeasure([(W1, 1.0), (W2, 1.0)])
    r = pc.picard_series(m, kn.Domain.LINE, 0.0, 2)
    br = W1 @ W2 - W2 @ W1
    coef = r.H[1][0, 2] / br[0, 2]
    return {"ok": abs(coef - 0.5) < 1e-6, "coef": coef}


# -- precess ---------------------------------------------------------------------


def check_classification():
    cases = [
        ((0.4, -0.4), pr.CaseTag.STATIONARY, True, True),
        ((1.0, 1.0), pr.CaseTag.SEMISTABLE, False, False),
        ((0.3, -0.2), pr.CaseTag.STABLE, True, True),
        ((-0.5, -1.5), pr.CaseTag.STABLE, False, True),
        ((-2.0, 3.0), pr.CaseTag.UNSTABLE_ELLIPTIC, False, False),
        ((2.0, 3.0), pr.CaseTag.UNSTABLE_HYPERBOLIC, False, False),
        ((-1.0, 2.0), pr.CaseTag.UNSTABLE_PARABOLIC, False, False),
        ((5.0, -5.0), pr.CaseTag.STATIONARY, None, True),
    ]
    ok = True
    for (b0, c0), tag, magnus, heat in cases:
        lab = pr.classify(pr.PrecessState(0.0, b0, c0))
        ok &= lab.tag is tag and lab.magnus_convergent is magnus \
            and lab.heat_sum_exists is heat
    return {"ok": ok}


def check_toe_closed_forms():
    s = pr.PrecessState(0.0, 1.0, 1.0)
    err1 = np.abs(pr.toe_closed_form(s) + np.array([[1, 0], [2 * math.pi, 1]])).max()
    st = pr.PrecessState(0.0, 1.2, 1.5)
    w = math.sqrt(math.pi ** 2 * (st.b0 + 1) * (st.c0 - 1))
    M = -np.array([[math.cosh(w), math.sqrt((st.c0 - 1) / (st.b0 + 1)) * math.sinh(w)],
                   [math.sqrt((st.b0 + 1) / (st.c0 - 1)) * math.sinh(w), math.cosh(w)]])
    err2 = np.abs(pr.toe_closed_form(st) - M).max()
    err3 = np.abs(pr.toe_closed_form(pr.PrecessState(0.0, 0.0, 0.0)) - np.eye(2)).max()
    return {"ok": err1 < 1e-10 and err2 < 1e-10 and err3 < 1e-12,
            "semistable": err1, "hyperbolic": err2}


def check_exponential_witnesses():
    s = pr.PrecessState(0.3, 1.0, 1.0)
    ok = not pr.is_real_exponential(pr.toe_closed_form(pr.PrecessState(0.0, 1.0, 1.0)))
    ok &= not pr.is_real_exponential(-math.e ** 0.3 * np.array([[1, 0], [0.5 * math.pi, 1]]))
    ok &= not pr.is_real_exponential(-np.array([[1, math.pi * (0.4 - 1)], [0, 1]]))
    ok &= pr.is_real_exponential(np.eye(2))
    ok &= pr.is_real_exponential(-2.0 * np.eye(2))
    rng = np.random.default_rng(0)
    from scipy.linalg import expm
    ok &= all(pr.is_real_exponential(expm(rng.normal(size=(2, 2)) * sc))
              for sc in (0.3, 1.0, 2.5) for _ in range(200))
    return {"ok": bool(ok)}


def check_trajectories():
    from scipy.integrate import solve_ivp
    ok = True
    worst = 0.0
    for (b0, c0) in [(0.3, -0.2), (1.4, 0.5), (-0.5, -1.5), (-2.0, 3.0),
                     (1.0, 1.0), (-0.6, 0.9), (2.5, 0.8), (-1.0, 0.4)]:
        st = pr.PrecessState(0.0, b0, c0, 0.8)
        tmax = pr.max_time(st)
        tend = min(0.8 * tmax if math.isfinite(tmax) else 3.0, 3.0)
        if tend <= 0:
            continue
        sol = solve_ivp(lambda t, u: pr.ode_rhs(st, u[0], u[1]), (0, tend),
                        [b0, c0], rtol=1e-11, atol=1e-13, dense_output=True)
        for t in np.linspace(0.1 * tend, tend, 5):
            b, c = pr.trajectory(st, t)
            bb, cc = sol.sol(t)
            worst = max(worst, abs(b - bb), abs(c - cc))
            ok &= abs((b + 1) * (c - 1) - st.conserved) < 1e-10
    return {"ok": ok and worst < 1e-8, "worst": worst}


def check_flux_closed_forms():
    s = pr.PrecessState(0.0, 1.0, 1.0, 0.5)
    err0 = np.abs(pr.boundary_flux_closed_form(s, 0.0) - np.diag([-1.0, 1.0])).max()
    # F from ordered integration of the diagonal flux (commuting, so exp of the integral)
    from scipy.integrate import quad
    val, _ = quad(lambda t: 2 * s.k / (1 + 4 * s.k * t), 0, 3.0)
    F_num = np.diag([math.exp(-val), math.exp(val)])
    errF = np.abs(F_num - pr.flux_conjugator_closed_form(s, 3.0)).max()
    total = pr.flux_total_variation(s, 3.0)
    return {"ok": err0 < 1e-14 and errF < 1e-8
            and abs(total - 0.5 * math.log(1 + 4 * s.k * 3.0)) < 1e-14
            and pr.FLUX_LEBESGUE_INTEGRABLE is False,
            "flux_err": errF}


def check_scaling_probe():
    tau = pr.scaling_probe(pr.PrecessState(0.0, -2.0, 3.0))
    ok = 0 < tau < 1 and 1 / 3 < tau < 1 / 2
    try:
        pr.scaling_probe(pr.PrecessState(0.0, 0.5, 0.5))
        ok = False
    except ValueError:
        pass
    return {"ok": ok, "tau": tau}


SUITES = {
    "freealg": [
        ("ring_axioms", check_ring_axioms),
        ("exp_log_inverse", check_exp_log_inverse),
        ("dynkin_witnesses", check_dynkin_witnesses),
        ("truncation_consistency", check_truncation_consistency),
        ("serialization_roundtrip", check_serialization_roundtrip),
    ],
    "expansions": [
        ("low_degree_tables", check_low_degree_tables),
        ("refactor_all_kinds", check_refactor_all_kinds),
        ("scaling_equivariance", check_scaling_equivariance),
        ("domination_magnus", check_domination_magnus),
    ],
    "majorants": [
        ("radii", check_majorant_radii),
        ("series_vs_closed_form", check_series_vs_closed_form),
        ("coefficient_ordering", check_majorant_ordering),
        ("divergence_beyond_radius", check_divergence_beyond_radius),
    ],
    "kernels": [
        ("conservation", check_kernel_conservation),
        ("semigroup", check_kernel_semigroup),
        ("theta_forms", check_theta_forms),
        ("pair_mass_line", check_pair_mass_line),
        ("pair_mass_halfline", check_pair_mass_halfline),
        ("pair_mass_circle", check_pair_mass_circle),
        ("splus_positivity_monotonicity", check_splus_positivity_and_monotone),
    ],
    "heatflow": [
        ("flow_basics", check_flow_basics),
        ("commuting_reduction", check_commuting_reduction),
        ("toe_conservation", check_toe_conservation_neumann),
        ("grid_convergence", check_grid_convergence),
        ("multiplicative_form", check_multiplicative_form),
        ("picard_magnus_anchor", check_picard_magnus_anchor),
        ("picard_pair_mass", check_picard_pair_mass),
    ],
    "precess": [
        ("classification", check_classification),
        ("toe_closed_forms", check_toe_closed_forms),
        ("exponential_witnesses", check_exponential_witnesses),
        ("trajectories", check_trajectories),
        ("flux_closed_forms", check_flux_closed_forms),
        ("scaling_probe", check_scaling_probe),
    ],
}


def thread_cap() -> int:
    env = os.environ.get("LIE_HEAT_THREADS")
    cores = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(cores, int(env)))
        except ValueError:
            pass
    return cores


def run_suite(suite: str) -> dict:
    """Run one suite (or 'all'); returns a machine-readable report."""
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from "
                         f"{['all'] + list(SUITES)}")
    checks = [(s, cname, fn) for s in names for cname, fn in SUITES[s]]

    def _run(entry):
        s, cname, fn = entry
        t0 = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:  # a crashed check is a failed check
            result = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
        result["seconds"] = round(time.perf_counter() - t0, 4)
        return {"suite": s, "check": cname, **result}

    workers = min(thread_cap(), len(checks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run, checks))
    else:
        results = [_run(c) for c in checks]
    ok = all(r["ok"] for r in results)
    failed = [f"{r['suite']}.{r['check']}" for r in results if not r["ok"]]
    return {"suite": suite, "ok": ok, "failed": failed, "checks": results}
