"""Acceptance gate: each criterion runs at its stated tolerance and prints
one pass/fail line.  Run with `pytest -v -s tests/test_acceptance.py`.
"""

import math
import random
import time

import numpy as np
import pytest
from scipy.linalg import expm

from lieheat import expansions as ex
from lieheat import freealg as fa
from lieheat import heatflow as hf
from lieheat import kernels as kn
from lieheat import majorants as mj
from lieheat import picard as pc
from lieheat import precessing as pr
from lieheat.expansions import ExpansionKind, StepMeasure
from lieheat.freealg import FreeSeries, bracket, rational as q
from lieheat.kernels import Domain


def _report(num, ok, detail):
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def _gens(n, d):
    return [FreeSeries.generator(i, n, d) for i in range(n)]


def _multilinear(n_atoms, kind, degree):
    m = StepMeasure([(i, 1) for i in range(n_atoms)])
    t = ex.expansion_terms(m, kind, degree)
    return fa.multilinear_part(t[degree], range(degree))


def test_criterion_1_exact_tables():
    t0 = time.perf_counter()
    ok = True

    g2 = _gens(2, 2)
    g3 = _gens(3, 3)
    g4 = _gens(4, 4)
    half = q(1, 2)
    mu3 = (bracket(bracket(g3[0], g3[1]), g3[2])
           + bracket(g3[0], bracket(g3[1], g3[2]))).scale(q(1, 6))

    # mu_1..mu_3
    ok &= _multilinear(1, ExpansionKind.MAGNUS, 1) == _gens(1, 1)[0]
    ok &= _multilinear(2, ExpansionKind.MAGNUS, 2) == bracket(*g2).scale(half)
    ok &= _multilinear(3, ExpansionKind.MAGNUS, 3) == mu3

    # zeta_left_1..4
    ok &= _multilinear(1, ExpansionKind.WILCOX_LEFT, 1) == _gens(1, 1)[0]
    ok &= _multilinear(2, ExpansionKind.WILCOX_LEFT, 2) == bracket(*g2).scale(half)
    z3 = (bracket(g3[1], bracket(g3[0], g3[2]))
          + bracket(g3[0], bracket(g3[1], g3[2]))).scale(q(1, 3))
    ok &= _multilinear(3, ExpansionKind.WILCOX_LEFT, 3) == z3
    z4 = (bracket(g4[0], bracket(g4[1], bracket(g4[2], g4[3])))
          + bracket(g4[0], bracket(g4[2], bracket(g4[1], g4[3])))
          + bracket(g4[1], bracket(g4[2], bracket(g4[0], g4[3])))).scale(q(1, 4))
    ok &= _multilinear(4, ExpansionKind.WILCOX_LEFT, 4) == z4

    # zeta_right via the negative-transpose identity, n <= 4
    for n in range(1, 5):
        zr = _multilinear(n, ExpansionKind.WILCOX_RIGHT, n)
        zl = _multilinear(n, ExpansionKind.WILCOX_LEFT, n)
        expect = FreeSeries(n, n)
        for w, c in zl.terms():
            expect = expect + FreeSeries(n, n, {tuple(n - 1 - i for i in w):
                                                c * (-1) ** (len(w) + 1)})
        ok &= zr == expect

    # eta_bowtie_1..4
    ok &= _multilinear(2, ExpansionKind.SYM_INWARD, 2) == bracket(*g2).scale(half)
    ok &= _multilinear(3, ExpansionKind.SYM_INWARD, 3) == mu3
    eta4 = (bracket(bracket(bracket(g4[0], g4[1]), g4[2]), g4[3])
            + bracket(g4[0], bracket(g4[1], bracket(g4[2], g4[3])))).scale(q(1, 8))
    ok &= _multilinear(4, ExpansionKind.SYM_INWARD, 4) == eta4

    # eta_outward_1..3 (coincide with the mu/eta forms at degree <= 3)
    ok &= _multilinear(2, ExpansionKind.SYM_OUTWARD, 2) == bracket(*g2).scale(half)
    ok &= _multilinear(3, ExpansionKind.SYM_OUTWARD, 3) == mu3

    # mu_4 and the outward degree-4 term are pinned to the stripping
    # recursion's own output (frozen regression forms, Lie-certified above).
    mu4 = _multilinear(4, ExpansionKind.MAGNUS, 4)
    mu4_resolved = (bracket(bracket(g4[0], bracket(g4[1], g4[2])), g4[3])
                    + bracket(g4[0], bracket(bracket(g4[1], g4[2]), g4[3]))
                    + bracket(bracket(g4[0], g4[1]), bracket(g4[2], g4[3]))
                    + bracket(bracket(g4[0], g4[2]), bracket(g4[1], g4[3]))).scale(q(1, 12))
    ok &= mu4 == mu4_resolved

    # outward degree-4 regression form (all four summands at 1/8):
    eta4o = _multilinear(4, ExpansionKind.SYM_OUTWARD, 4)
    eta4o_flat = (bracket(g4[0], bracket(g4[3], bracket(g4[2], g4[1])))
                  + bracket(g4[1], bracket(g4[2], bracket(g4[3], g4[0])))
                  + bracket(g4[2], bracket(g4[1], bracket(g4[3], g4[0])))
                  + bracket(g4[3], bracket(g4[0], bracket(g4[2], g4[1])))).scale(q(1, 8))
    ok &= eta4o == eta4o_flat

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10.0
    _report(1, ok, f"exact table reproduction, zero tolerance ({elapsed:.1f}s < 10s)")


def test_criterion_2_factorization_identities():
    t0 = time.perf_counter()
    rng = random.Random(20260811)
    ok = True
    for i in range(200):
        n = rng.randint(1, 4)
        m = StepMeasure([(rng.randrange(4), q(rng.randint(1, 4), rng.randint(1, 4)))
                         for _ in range(n)])
        E = ex.toe_formal(m, 6)
        for kind in ExpansionKind:
            terms = ex._strip_terms(E, kind, 6)
            ok &= ex.refactor_product(terms, kind) == E
            ok &= all(fa.dynkin_is_lie(t) for t in terms[1:])
        if not ok:
            break
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120.0
    _report(2, ok, f"200 random measures x 5 kinds refactor exactly at degree 6, "
                   f"all terms Lie ({elapsed:.1f}s < 120s)")


def test_criterion_3_majorant_radii_and_series():
    expected = {
        "magnus_heat": 1.0,
        "wilcox_halfline": 2 - math.sqrt(2),
        "wilcox_improved": 2.0 / 3.0,
        "sym_outward_improved": 4 - 2 * math.sqrt(2),
        "magnus_periodic_improved": 4 - 2 * math.sqrt(2),
    }
    ok = True
    worst_r = 0.0
    for name, r in expected.items():
        worst_r = max(worst_r, abs(mj.radius(mj.majorant_spec(name)) - r))
    ok &= worst_r < 1e-12
    # series vs closed form at x = 0.9*radius; the truncation tail of a
    # square-root branch point needs ~400 terms to reach 1e-10 (see the
    # companion xfail test for the unattainable 20-term variant).
    worst_s = 0.0
    for name in expected:
        spec = mj.majorant_spec(name)
        x = 0.9 * mj.radius(spec)
        worst_s = max(worst_s, abs(mj.partial_sum(spec, x, 400)
                                   - mj.closed_form(spec, x)))
    ok &= worst_s < 1e-10
    _report(3, ok, f"radii exact to {worst_r:.1e} (<= 1e-12); series vs closed "
                   f"form {worst_s:.1e} (<= 1e-10) at 0.9*radius with 400 terms "
                   f"[literal 20-term variant is a spec defect; see xfail twin]")


@pytest.mark.xfail(strict=True,
                   reason="spec defect: a square-root branch point forces "
                          "g_n ~ n^(-3/2) r^(-n), so 20 terms at x=0.9r leave "
                          "a ~4e-4 tail; 1e-10 is unattainable as stated")
def test_criterion_3_literal_twenty_terms():
    spec = mj.majorant_spec("magnus_heat")
    x = 0.9 * mj.radius(spec)
    assert abs(mj.partial_sum(spec, x, 20) - mj.closed_form(spec, x)) < 1e-10


def test_criterion_4_domination():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    spec = mj.majorant_spec("magnus_heat")
    ok = True
    checked = 0
    for i in range(50):
        dim = 2 if i < 25 else 3
        n_atoms = int(rng.integers(2, 4))
        mats = [rng.normal(size=(dim, dim)) for _ in range(n_atoms)]
        lengths = rng.uniform(0.3, 1.2, size=n_atoms)
        base = StepMeasure(list(zip(mats, lengths)))
        for mass in (0.25, 0.5, 0.8):
            m = base.scaled(mass / base.cumulative_mass("lie"))
            rep = ex.domination_check(m, ExpansionKind.MAGNUS, spec, 6)
            ok &= rep.all_dominated and rep.all_moan_oteo
            checked += 1
        if not ok:
            break
    elapsed = time.perf_counter() - t0
    _report(4, ok, f"{checked} (measure, mass) pairs: ||mu_n||_g <= g_n M^n and "
                   f"Moan-Oteo for n <= 6, never violated ({elapsed:.1f}s)")


def test_criterion_5_kernel_oracles():
    t0 = time.perf_counter()
    p = kn.KernelParams(k=0.7)
    ok = True
    # conservation 1e-10
    for d in Domain:
        x = 0.37 if d is not Domain.LINE else -0.2
        ok &= kn.mass_conservation_residual(d, x, 0.13, p) < 1e-10
    # semigroup 1e-9
    for d in Domain:
        x, y = (0.3, 0.62) if d is not Domain.LINE else (-0.4, 0.9)
        ok &= kn.semigroup_residual(d, x, y, 0.08, 0.11, p) < 1e-9
    # theta vs image sum 1e-13
    for kt in (0.02, 0.05, 0.1, 0.3, 1.0):
        t = kt / p.k
        v = 2 * p.k * t
        img = sum(math.exp(-(0.29 - pp) ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v)
                  for pp in range(-90, 91))
        ok &= abs(img - kn.theta3(math.pi * 0.29,
                                  math.exp(-4 * math.pi ** 2 * p.k * t))) < 1e-13
    # pair masses against independent quadrature
    ok &= abs(kn.pair_mass_line_quadrature(-0.3, 0.5, 1.3, 0.6) - 0.5) < 1e-8
    hl = kn.pair_mass_halfline_quadrature(0.2, 0.9, 1.0, 1.0)
    ok &= abs(hl.total - 0.5) < 1e-8
    y = 0.15
    ok &= abs(kn.pair_mass_circle(-y, y).net_coefficient - (0.5 - 2 * y)) < 1e-8
    flux_quad = kn.s_plus_time_integral_quadrature(0.2, 400.0, 1.0)
    tail = kn.s_plus_time_integral(0.2, 1e9, 1.0) - kn.s_plus_time_integral(0.2, 400.0, 1.0)
    ok &= abs(flux_quad + tail - (0.5 - 0.2)) < 1e-8
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    _report(5, ok, f"kernel normalization, semigroup, theta=images, and all pair "
                   f"masses vs quadrature at stated tolerances ({elapsed:.1f}s < 60s)")


def test_criterion_6_pde_vs_mass_bound():
    t0 = time.perf_counter()
    f = hf.two_bump_field(256, 0.8, k=1.0)
    d = hf.run(f, t_max=3.0, tol_homog=1e-6)
    bound = 2 - 2 * math.sqrt(1 - 0.8)
    exp_H_err = float(np.abs(expm(d.H) - d.toe_initial).max())
    ok = d.status == "homogenized"
    ok &= exp_H_err < 1e-4
    ok &= d.M_I + d.M_G <= bound + 5e-3
    elapsed = time.perf_counter() - t0
    _report(6, ok, f"Neumann M_I=0.8 at n_x=256: ||exp(H)-toe|| = {exp_H_err:.1e} "
                   f"(< 1e-4), M_I+M_G = {d.M_I + d.M_G:.4f} <= {bound:.4f}+5e-3 "
                   f"({elapsed:.0f}s)")


def test_criterion_7_precessing_regression():
    t0 = time.perf_counter()
    ok = True
    notes = []

    # toe closed form at the semistable corner (rotation-normalized a0 = 0)
    toe = pr.toe_closed_form(pr.PrecessState(0.0, 1.0, 1.0))
    err = np.abs(toe + math.e ** 0.0 * np.array([[1, 0], [2 * math.pi, 1]])).max()
    ok &= err < 1e-10
    notes.append(f"toe={err:.1e}")

    # the predicate rejects it and both eq:exe families
    ok &= not pr.is_real_exponential(toe)
    ok &= not pr.is_real_exponential(
        -math.e ** 0.4 * np.array([[1.0, 0.0], [(0.2 + 1) * math.pi, 1.0]]))
    ok &= not pr.is_real_exponential(
        -math.e ** -0.1 * np.array([[1.0, math.pi * (0.4 - 1)], [0.0, 1.0]]))

    # PDE trajectory vs the closed-form phase-plane row (1e-5)
    st = pr.PrecessState(0.0, 0.3, -0.2, 1.0)
    f = hf.precessing_field(256, st.a0, st.b0, st.c0, k=st.k)
    dt = 0.25 * f.h ** 2 / st.k
    steps = int(round(0.1 / dt))
    dt = 0.1 / steps
    for _ in range(steps):
        f = hf.step(f, dt)
    a, b, c, spread = hf.extract_precessing(f)
    bb, cc = pr.trajectory(st, hf.TIME_SCALE_PRECESSING * 0.1)
    traj_err = max(abs(b - bb), abs(c - cc))
    ok &= traj_err < 1e-5
    notes.append(f"trajectory={traj_err:.1e}")

    # F_tau vs its closed form (1e-5)
    fsemi = hf.precessing_field(384, 0.0, 1.0, 1.0, k=1.0)
    dsemi = hf.run(fsemi, t_max=0.05, tol_homog=0.0, check_every=16)
    tau_study = hf.TIME_SCALE_PRECESSING * dsemi.t_final
    Fexp = pr.flux_conjugator_closed_form(pr.PrecessState(0.0, 1.0, 1.0, 1.0), tau_study)
    flux_err = float(np.abs(dsemi.F - Fexp).max())
    ok &= flux_err < 1e-5
    notes.append(f"F_tau={flux_err:.1e}")

    # case (iii) false positive
    label = pr.classify(pr.PrecessState(0.0, -0.5, -1.5))
    ok &= label.heat_sum_exists and label.magnus_convergent is False

    # under pi*max(|b0|,|c0|) < 1/2 the heat sum equals the principal log (1e-5)
    st2 = pr.PrecessState(0.05, 0.1, -0.05, 1.0)
    assert math.pi * max(abs(st2.b0), abs(st2.c0)) < 0.5
    f2 = hf.precessing_field(192, st2.a0, st2.b0, st2.c0, k=st2.k)
    hs, diag = hf.heat_sum_periodic(f2, t_max=0.8, tol_homog=1e-11)
    log_err = float(np.abs(hs - pr.heat_sum_principal_log(st2)).max())
    ok &= log_err < 1e-5
    notes.append(f"heat_sum_vs_log={log_err:.1e}")

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120.0
    _report(7, ok, ", ".join(notes) + f"; false-positive flags exhibited "
                                      f"({elapsed:.0f}s < 120s)")


def _grade1(d, entries):
    W = np.zeros((d, d))
    for i, v in enumerate(entries):
        W[i, i + 1] = v
    return W


def test_criterion_8_beta_sweep_factorization():
    t0 = time.perf_counter()
    betas = [0.0, 2.0, 4.0, 8.0]

    # half-line, 4x4 strictly upper triangular: grade masses -> zeta_left
    m4 = StepMeasure([
        (_grade1(4, (0.18, -0.37, 0.27)), 1.0),
        (_grade1(4, (0.34, 0.11, -0.29)), 1.0),
    ])
    rep_h = pc.beta_sweep(m4, Domain.HALFLINE, betas, 3)
    tot_h = [r.total() for r in rep_h.rows]
    ok = rep_h.monotone()
    ok &= max(rep_h.rows[-1].residuals.values()) < 1e-3

    # line, 5x5: the grade-4 mass distinguishes eta_bowtie from Magnus
    m5 = StepMeasure([
        (_grade1(5, (0.9, -0.55, 0.75, 0.4)), 1.0),
        (_grade1(5, (-0.35, 0.8, 0.5, -0.6)), 1.0),
    ])
    rep_l = pc.beta_sweep(m5, Domain.LINE, betas, 4)
    tot_l = [r.total() for r in rep_l.rows]
    ok &= rep_l.monotone()
    ok &= max(rep_l.rows[-1].residuals.values()) < 1e-3

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300.0
    _report(8, ok, f"half-line residuals {['%.2e' % t for t in tot_h]} and line "
                   f"residuals {['%.2e' % t for t in tot_l]} decrease "
                   f"monotonically, < 1e-3 at beta=8 ({elapsed:.0f}s < 300s)")
