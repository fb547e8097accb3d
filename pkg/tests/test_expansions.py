import random

import numpy as np
import pytest
from scipy.linalg import expm

from lieheat import expansions as ex
from lieheat import freealg as fa
from lieheat import majorants as mj
from lieheat.expansions import ExpansionKind, StepMeasure
from lieheat.freealg import FreeSeries, bracket, rational as q


def gens(n, d):
    return [FreeSeries.generator(i, n, d) for i in range(n)]


def unit_atoms(n):
    return StepMeasure([(i, 1) for i in range(n)])


def multilinear(measure, kind, n):
    t = ex.expansion_terms(measure, kind, n)
    return fa.multilinear_part(t[n], range(n))


class TestToeFormal:
    def test_single_atom(self):
        m = StepMeasure([(0, 1)])
        assert ex.toe_formal(m, 5) == fa.exp(FreeSeries.generator(0, 1, 5))

    def test_bch_measure(self):
        m = unit_atoms(2)
        g = gens(2, 4)
        assert ex.toe_formal(m, 4) == fa.exp(g[0]) * fa.exp(g[1])
        lg = fa.log(ex.toe_formal(m, 4))
        assert lg.degree_part(2) == bracket(g[0], g[1]).scale(q(1, 2)).degree_part(2)

    def test_atom_merging(self):
        m = StepMeasure([(0, q(1, 2)), (0, q(1, 2))])
        assert ex.toe_formal(m, 5) == ex.toe_formal(StepMeasure([(0, 1)]), 5)

    def test_numeric_rejected(self):
        m = StepMeasure([(np.eye(2), 1.0)])
        with pytest.raises(ex.MeasureModeError):
            ex.toe_formal(m, 3)


class TestLowDegreeTables:
    """Exact low-degree polynomial forms of the five expansions."""

    def test_magnus_1_to_3(self):
        g = gens(3, 3)
        m = unit_atoms(3)
        assert multilinear(unit_atoms(1), ExpansionKind.MAGNUS, 1) == \
            FreeSeries.generator(0, 1, 1)
        assert multilinear(unit_atoms(2), ExpansionKind.MAGNUS, 2) == \
            bracket(*gens(2, 2)).scale(q(1, 2))
        mu3 = (bracket(bracket(g[0], g[1]), g[2])
               + bracket(g[0], bracket(g[1], g[2]))).scale(q(1, 6))
        assert multilinear(m, ExpansionKind.MAGNUS, 3) == mu3

    def test_wilcox_left_1_to_4(self):
        g = gens(4, 4)
        m = unit_atoms(4)
        z2 = bracket(*gens(2, 2)).scale(q(1, 2))
        assert multilinear(unit_atoms(2), ExpansionKind.WILCOX_LEFT, 2) == z2
        g3 = gens(3, 3)
        z3 = (bracket(g3[1], bracket(g3[0], g3[2]))
              + bracket(g3[0], bracket(g3[1], g3[2]))).scale(q(1, 3))
        assert multilinear(unit_atoms(3), ExpansionKind.WILCOX_LEFT, 3) == z3
        z4 = (bracket(g[0], bracket(g[1], bracket(g[2], g[3])))
              + bracket(g[0], bracket(g[2], bracket(g[1], g[3])))
              + bracket(g[1], bracket(g[2], bracket(g[0], g[3])))).scale(q(1, 4))
        assert multilinear(m, ExpansionKind.WILCOX_LEFT, 4) == z4

    def test_sym_inward_1_to_4(self):
        g3 = gens(3, 3)
        eta3 = (bracket(bracket(g3[0], g3[1]), g3[2])
                + bracket(g3[0], bracket(g3[1], g3[2]))).scale(q(1, 6))
        assert multilinear(unit_atoms(3), ExpansionKind.SYM_INWARD, 3) == eta3
        g = gens(4, 4)
        eta4 = (bracket(bracket(bracket(g[0], g[1]), g[2]), g[3])
                + bracket(g[0], bracket(g[1], bracket(g[2], g[3])))).scale(q(1, 8))
        assert multilinear(unit_atoms(4), ExpansionKind.SYM_INWARD, 4) == eta4

    def test_sym_outward_1_to_3_match_inward(self):
        for n in (1, 2, 3):
            m = unit_atoms(n)
            assert multilinear(m, ExpansionKind.SYM_OUTWARD, n) == \
                multilinear(m, ExpansionKind.SYM_INWARD, n)

    def test_wilcox_right_transposition_identity(self):
        for n in (1, 2, 3, 4):
            m = unit_atoms(n)
            zr = multilinear(m, ExpansionKind.WILCOX_RIGHT, n)
            zl = multilinear(m, ExpansionKind.WILCOX_LEFT, n)
            expect = FreeSeries(n, n)
            for w, c in zl.terms():
                w2 = tuple(n - 1 - i for i in w)
                expect = expect + FreeSeries(n, n, {w2: c * (-1) ** (len(w) + 1)})
            assert zr == expect


class TestRefactor:
    def test_single_atom_all_kinds(self):
        m = StepMeasure([(0, q(3, 2))])
        for kind in ExpansionKind:
            terms = ex.expansion_terms(m, kind, 5)
            assert ex.refactor_check(m, kind, 5, terms)
            assert all(t.is_zero() for t in terms[2:])

    def test_random_rational_measures_all_kinds(self):
        rng = random.Random(17)
        for _ in range(5):
            n = rng.randint(1, 4)
            m = StepMeasure([(rng.randrange(4), q(rng.randint(1, 4), rng.randint(1, 4)))
                             for _ in range(n)])
            for kind in ExpansionKind:
                terms = ex.expansion_terms(m, kind, 6)
                assert ex.refactor_check(m, kind, 6, terms), kind
                assert all(fa.dynkin_is_lie(t) for t in terms[1:])

    def test_degree_one_is_total_measure(self):
        m = StepMeasure([(0, q(1, 3)), (1, 2), (0, q(1, 2))])
        for kind in ExpansionKind:
            t1 = ex.expansion_terms(m, kind, 3)[1]
            expect = FreeSeries(2, 3, {(0,): q(1, 3) + q(1, 2), (1,): 2})
            assert t1 == expect

    def test_scaling_equivariance(self):
        m = StepMeasure([(0, 1), (1, q(1, 2)), (2, q(2, 3))])
        s = q(5, 3)
        for kind in (ExpansionKind.MAGNUS, ExpansionKind.SYM_OUTWARD):
            t1 = ex.expansion_terms(m, kind, 4)
            t2 = ex.expansion_terms(m.scaled(s), kind, 4)
            for n in range(1, 5):
                assert t1[n].scale(s ** n) == t2[n]


class TestEvalMatrix:
    def test_word_product(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        B = np.array([[0.0, 0.0], [2.0, 0.0]])
        term = FreeSeries(2, 3, {(0, 1): 1})
        assert np.allclose(ex.eval_matrix(term, [A, B]), A @ B)

    def test_half_bracket(self):
        A = np.array([[0.1, 1.0], [0.4, -0.3]])
        B = np.array([[0.0, -0.2], [2.0, 0.5]])
        term = bracket(FreeSeries.generator(0, 2, 3),
                       FreeSeries.generator(1, 2, 3)).scale(q(1, 2))
        assert np.allclose(ex.eval_matrix(term, [A, B]), 0.5 * (A @ B - B @ A))

    def test_unassigned_generator(self):
        term = FreeSeries(2, 3, {(1,): 1})
        with pytest.raises(KeyError):
            ex.eval_matrix(term, {0: np.eye(2)})

    def test_degree2_magnus_vs_log_expm(self):
        rng = np.random.default_rng(1)
        A, B = rng.normal(size=(2, 3, 3)) * 0.2
        m = StepMeasure([(0, 1), (1, 1)])
        term2 = ex.expansion_terms(m, ExpansionKind.MAGNUS, 2)[2]
        got = ex.eval_matrix(term2, [A, B])
        # 4-point mixed difference extracts the bilinear s*t coefficient of
        # log(exp(sA) exp(tB)); only odd-odd terms survive, so the first
        # contamination is s^3 t / s t^3 and eps = 0.02 is already ~1e-13.
        eps = 0.02
        from scipy.linalg import logm
        def lg(s, t):
            return np.real(logm(expm(s * A) @ expm(t * B)))
        mixed = (lg(eps, eps) - lg(eps, -eps) - lg(-eps, eps) + lg(-eps, -eps)) / (4 * eps * eps)
        assert np.abs(got - mixed).max() < 1e-12


class TestDomination:
    def test_degree_one_triangle_inequality(self):
        rng = np.random.default_rng(2)
        mats = [rng.normal(size=(2, 2)) for _ in range(3)]
        m = StepMeasure([(M, 0.4) for M in mats])
        spec = mj.majorant_spec("magnus_heat")
        rep = ex.domination_check(m, ExpansionKind.MAGNUS, spec, 1)
        assert rep.rows[0].dominated and rep.rows[0].moan_oteo_ok

    def test_random_small_measure_all_bounds(self):
        rng = np.random.default_rng(8)
        mats = [rng.normal(size=(2, 2)) for _ in range(2)]
        m = StepMeasure([(mats[0], 0.7), (mats[1], 0.9)])
        m = m.scaled(0.5 / m.cumulative_mass("lie"))
        spec = mj.majorant_spec("magnus_heat")
        rep = ex.domination_check(m, ExpansionKind.MAGNUS, spec, 6)
        assert rep.all_dominated
        assert rep.all_moan_oteo

    def test_formal_mode_rejected(self):
        spec = mj.majorant_spec("magnus_heat")
        with pytest.raises(ex.MeasureModeError):
            ex.domination_check(unit_atoms(2), ExpansionKind.MAGNUS, spec, 3)


def test_numeric_toe_matches_formal_eval():
    rng = np.random.default_rng(5)
    mats = [rng.normal(size=(2, 2)) * 0.3 for _ in range(3)]
    lengths = [0.5, 1.2, 0.8]
    m = StepMeasure(list(zip(mats, lengths)))
    toe_num = np.eye(2)
    for M, l in m.atoms:
        toe_num = toe_num @ expm(M * l)
    # exact formal terms evaluated and re-summed
    terms = ex.numeric_terms(m, ExpansionKind.MAGNUS, 6)
    total = sum(terms[1:], np.zeros((2, 2)))
    assert np.abs(expm(total) - toe_num).max() < 2e-5


def test_domination_report_json_interface():
    rng = np.random.default_rng(11)
    m = StepMeasure([(rng.normal(size=(2, 2)), 0.4), (rng.normal(size=(2, 2)), 0.3)])
    m = m.scaled(0.4 / m.cumulative_mass("lie"))
    rep = ex.domination_check(m, ExpansionKind.MAGNUS, mj.majorant_spec("magnus_heat"), 3)
    d = rep.to_json_dict()
    assert d["kind"] == "magnus"
    row = d["rows"][1]
    assert set(row) == {"degree", "norm_g", "majorant", "dominated",
                        "norm_op", "moan_oteo", "moan_oteo_ok"}
    assert row["degree"] == 2 and row["dominated"] is True


def test_bch_measure_degree3_magnus_value():
    # integrated degree-3 term of exp(X)exp(Y): (1/12)([X,[X,Y]] + [[X,Y],Y])
    m = StepMeasure([(0, 1), (1, 1)])
    t3 = ex.expansion_terms(m, ExpansionKind.MAGNUS, 3)[3]
    X, Y = (FreeSeries.generator(i, 2, 3) for i in range(2))
    expect = (bracket(X, bracket(X, Y)) + bracket(bracket(X, Y), Y)).scale(q(1, 12))
    assert t3 == expect.degree_part(3)
