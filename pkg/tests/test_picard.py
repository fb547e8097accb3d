import numpy as np
import pytest

from lieheat import picard as pc
from lieheat.expansions import ExpansionKind, StepMeasure
from lieheat.kernels import Domain, pair_mass_circle, pair_mass_halfline


def grade1(d, entries):
    W = np.zeros((d, d))
    for i, v in enumerate(entries):
        W[i, i + 1] = v
    return W


@pytest.fixture(scope="module")
def measure_4x4():
    return StepMeasure([
        (grade1(4, (0.18, -0.37, 0.27)), 1.0),
        (grade1(4, (0.34, 0.11, -0.29)), 1.0),
    ])


@pytest.fixture(scope="module")
def measure_5x5():
    return StepMeasure([
        (grade1(5, (0.9, -0.55, 0.75, 0.4)), 1.0),
        (grade1(5, (-0.35, 0.8, 0.5, -0.6)), 1.0),
    ])


class TestGeometry:
    def test_positions_are_midpoints(self):
        m = StepMeasure([(grade1(3, (1.0, 0.0)), 0.5), (grade1(3, (0.0, 1.0)), 1.5)])
        pos, wts = pc.measure_geometry(m, Domain.HALFLINE)
        assert pos == pytest.approx([0.25, 1.25])
        assert np.abs(wts[1] - 1.5 * grade1(3, (0.0, 1.0))).max() == 0.0

    def test_line_centered(self):
        m = StepMeasure([(grade1(3, (1.0, 0.0)), 1.0), (grade1(3, (0.0, 1.0)), 1.0)])
        pos, _ = pc.measure_geometry(m, Domain.LINE)
        assert pos == pytest.approx([-0.5, 0.5])

    def test_non_nilpotent_rejected(self):
        m = StepMeasure([(np.eye(3), 1.0)])
        with pytest.raises(ValueError, match="nilpotent"):
            pc.picard_series(m, Domain.LINE, 0.0, 2)

    def test_mixed_grade_rejected(self):
        W = np.zeros((4, 4))
        W[0, 1] = 1.0
        W[0, 2] = 0.5  # grade-2 admixture
        with pytest.raises(ValueError, match="grade 1"):
            pc.picard_series(StepMeasure([(W, 1.0)]), Domain.LINE, 0.0, 2)


class TestGradeMassAnchors:
    def test_h1_is_total_weight(self, measure_4x4):
        pos, wts = pc.measure_geometry(measure_4x4, Domain.LINE)
        r = pc.picard_series(measure_4x4, Domain.LINE, 3.0, 1)
        assert np.abs(r.H[0] - sum(wts)).max() < 1e-12

    def test_h2_net_half_line_domain(self):
        W1, W2 = grade1(3, (1.0, 0.0)), grade1(3, (0.0, 1.0))
        m = StepMeasure([(W1, 1.0), (W2, 1.0)])
        r = pc.picard_series(m, Domain.LINE, 0.0, 2)
        br = W1 @ W2 - W2 @ W1
        assert r.H[1][0, 2] / br[0, 2] == pytest.approx(0.5, abs=1e-6)

    def test_h2_halfline_matches_arctan_masses(self):
        W1, W2 = grade1(3, (1.0, 0.0)), grade1(3, (0.0, 1.0))
        m = StepMeasure([(W1, 0.8), (W2, 1.4)])
        pos, wts = pc.measure_geometry(m, Domain.HALFLINE)
        r = pc.picard_series(m, Domain.HALFLINE, 0.0, 2)
        br = wts[0] @ wts[1] - wts[1] @ wts[0]
        expect = pair_mass_halfline(pos[0], pos[1], 1.0, 1.0).total
        assert r.H[1][0, 2] / br[0, 2] == pytest.approx(expect, abs=1e-8)

    def test_beta_zero_magnus_all_engines(self, measure_4x4):
        mu = pc.expansion_targets(measure_4x4, ExpansionKind.MAGNUS, 3)
        for dom, tol in ((Domain.LINE, 1e-9), (Domain.HALFLINE, 5e-6),
                         (Domain.INTERVAL01, 1e-6)):
            r = pc.picard_series(measure_4x4, dom, 0.0, 3)
            assert np.linalg.norm(r.H[1] - mu[2], 2) < tol, dom
            assert np.linalg.norm(r.H[2] - mu[3], 2) < tol, dom

    def test_line_h4_beta_zero_magnus(self, measure_5x5):
        mu = pc.expansion_targets(measure_5x5, ExpansionKind.MAGNUS, 4)
        r = pc.picard_series(measure_5x5, Domain.LINE, 0.0, 4)
        assert np.linalg.norm(r.H[3] - mu[4], 2) < 1e-6

    def test_line_h3_is_beta_independent(self, measure_4x4):
        mu = pc.expansion_targets(measure_4x4, ExpansionKind.MAGNUS, 3)
        for beta in (0.0, 3.0, 8.0):
            r = pc.picard_series(measure_4x4, Domain.LINE, beta, 3)
            assert np.linalg.norm(r.H[2] - mu[3], 2) < 1e-9

    def test_circle_h2_net_matches_pair_mass(self):
        W1 = grade1(4, (1.0, 0.0, 0.0))
        W2 = grade1(4, (0.0, 1.0, 0.0))
        W3 = grade1(4, (0.0, 0.0, 1.0))
        m = StepMeasure([(W1, 0.2), (W2, 0.3), (W3, 0.5)])
        pos, wts = pc.measure_geometry(m, Domain.CIRCLE)
        r = pc.picard_series(m, Domain.CIRCLE, 0.0, 2)
        b12 = (wts[0] @ wts[1] - wts[1] @ wts[0])[0, 2]
        b23 = (wts[1] @ wts[2] - wts[2] @ wts[1])[1, 3]
        assert r.H[1][0, 2] / b12 == pytest.approx(
            pair_mass_circle(pos[0], pos[1]).net_coefficient, abs=5e-6)
        assert r.H[1][1, 3] / b23 == pytest.approx(
            pair_mass_circle(pos[1], pos[2]).net_coefficient, abs=5e-6)

    def test_a1_profile_is_kernel_smoothed(self, measure_4x4):
        from lieheat.kernels import KernelParams, kernel
        pos, wts = pc.measure_geometry(measure_4x4, Domain.HALFLINE)
        eng = pc.PairEngine(pos, pc.grade_weights(4, 1.0), Domain.HALFLINE)
        x = np.linspace(0.05, 3.0, 7)
        t = 0.2
        got = eng.profile_a1(wts, t, x)
        expect = np.zeros_like(got)
        k1 = pc.grade_weights(4, 1.0)[0]
        for xi_idx, xi in enumerate(x):
            for yi, W in zip(pos, wts):
                expect[xi_idx] += kernel(Domain.HALFLINE, xi, yi, t,
                                         KernelParams(k=k1)) * W
        assert np.abs(got - expect).max() < 1e-12


class TestBetaSweep:
    def test_halfline_monotone_toward_zeta(self, measure_4x4):
        rep = pc.beta_sweep(measure_4x4, Domain.HALFLINE, [0.0, 2.0, 4.0, 8.0], 3)
        totals = [r.total() for r in rep.rows]
        assert rep.monotone()
        assert totals[0] > 10 * totals[-1]

    def test_line_monotone_toward_eta(self, measure_5x5):
        rep = pc.beta_sweep(measure_5x5, Domain.LINE, [0.0, 2.0, 4.0, 8.0], 4)
        assert rep.monotone()
        assert rep.rows[-1].residuals[4] < 1e-3

    def test_betas_must_increase(self, measure_4x4):
        with pytest.raises(ValueError):
            pc.beta_sweep(measure_4x4, Domain.HALFLINE, [0.0, 0.0], 3)

    def test_domain_restriction(self, measure_4x4):
        with pytest.raises(ValueError):
            pc.beta_sweep(measure_4x4, Domain.CIRCLE, [0.0, 1.0], 3)


class TestScopeLimits:
    def test_halfline_grade4_rejected(self, measure_5x5):
        with pytest.raises(ValueError, match="grade 3"):
            pc.picard_series(measure_5x5, Domain.HALFLINE, 0.0, 4)

    def test_dim_cap(self):
        W = np.zeros((6, 6))
        W[0, 1] = 1.0
        with pytest.raises(ValueError, match="5x5"):
            pc.picard_series(StepMeasure([(W, 1.0)]), Domain.LINE, 0.0, 2)


def test_profile_sampling_on_line(measure_4x4):
    r = pc.picard_series(measure_4x4, Domain.LINE, 0.0, 2, profile_time=0.3,
                         n_x=64)
    x, profs = r.profiles
    assert profs[0].shape == (64, 4, 4)
    # order-1 mass is conserved under the sampled profile within grid error
    integral = np.trapezoid(profs[0], x, axis=0)
    pos, wts = pc.measure_geometry(measure_4x4, Domain.LINE)
    assert np.abs(integral - sum(wts)).max() < 1e-3
