"""Correlation functions, Janossy densities, and conditional intensities."""
import math

import numpy as np
import pytest

from dpplab.densities import (
    ConditionalKernel,
    DeterminantRatio,
    candidate_intensity,
    candidate_sequence,
    chain_rule_product,
    cluster_intensity,
    compound_intensity,
    conditional_kernel,
    correlation,
    janossy_density,
    janossy_normalization,
    psd_logdet,
    vacuum_probability,
)
from dpplab.errors import DomainError, NoFiniteRange, ZeroDenominator
from dpplab.geometry import Configuration, Window
from dpplab.kernels import FiniteRangeFourier, RenewalExponential
from dpplab.operators import discretize, fredholm_det_I_minus, interaction_values
from dpplab.samplers import stream

SPEC = RenewalExponential(0.25, 1.0)
FR = FiniteRangeFourier(1.0, 0.8, dimension=1)


class TestDeterminantRatio:
    def test_plain_ratio(self):
        r = DeterminantRatio(math.log(6.0), math.log(2.0))
        assert r.value == pytest.approx(3.0)

    def test_zero_denominator_convention(self):
        assert DeterminantRatio(0.0, float("-inf")).value == 0.0
        assert DeterminantRatio(float("-inf"), 0.0).value == 0.0

    def test_psd_logdet_zero_paths(self):
        assert psd_logdet(np.zeros((2, 2))) == float("-inf")
        assert psd_logdet(np.array([[1.0, 2.0], [2.0, 1.0]])) == float("-inf")
        assert psd_logdet(np.empty((0, 0))) == 0.0
        assert psd_logdet(np.eye(3) * 2.0) == pytest.approx(3 * math.log(2.0))


class TestCorrelation:
    def test_empty_is_one(self):
        assert correlation(SPEC, Configuration.empty(1)) == 1.0

    def test_singleton_is_intensity(self):
        assert correlation(SPEC, Configuration([(3.7,)])) == pytest.approx(0.25)

    def test_pair_closed_form(self):
        # rho^2 (1 - exp(-2 a s)) for the exponential correlation
        for s in (0.05, math.log(2.0), 2.4):
            got = correlation(SPEC, Configuration([(0.0,), (s,)]))
            assert got == pytest.approx(0.0625 * (1.0 - math.exp(-2.0 * s)), rel=1e-12)

    def test_repulsive(self):
        # pair correlation vanishes linearly at contact: ratio ~ 2 a s
        s = 0.01
        close = correlation(SPEC, Configuration([(0.0,), (s,)]))
        far = correlation(SPEC, Configuration([(0.0,), (8.0,)]))
        assert close < far
        assert close / far == pytest.approx(2.0 * s, rel=0.02)


class TestJanossy:
    window = Window.interval(0.0, 4.0)
    disc = discretize(SPEC, "K", window, 80)

    def test_empty_is_vacuum(self):
        vac = vacuum_probability(SPEC, self.window, 80, disc=self.disc)
        assert janossy_density(SPEC, self.window, 80, Configuration.empty(1), disc=self.disc) == vac
        assert 0.0 < vac < 1.0

    def test_two_route_determinant(self):
        cfg = Configuration([(0.5,), (1.9,), (3.3,)])
        got = janossy_density(SPEC, self.window, 80, cfg, disc=self.disc)
        vac = fredholm_det_I_minus(self.disc)
        block = interaction_values(self.disc, cfg.coords)
        assert got == pytest.approx(vac * float(np.linalg.det(block)), rel=1e-10)

    def test_config_outside_window_rejected(self):
        with pytest.raises(DomainError):
            janossy_density(SPEC, self.window, 80, Configuration([(5.0,)]), disc=self.disc)

    def test_low_order_terms_match_brute_force(self):
        # e_1, e_2 of the weighted spectrum vs direct minor sums
        disc = discretize(SPEC, "K", Window.interval(0.0, 2.0), 24)
        w = disc.quad.weights
        J = interaction_values(disc, disc.quad.nodes)
        wJ = J * np.sqrt(np.outer(w, w))
        nu = np.linalg.eigvalsh(wJ)
        e1 = float(nu.sum())
        e2 = float((nu.sum() ** 2 - (nu**2).sum()) / 2.0)
        d = np.diag(wJ)
        bf1 = float(d.sum())
        pair = np.outer(d, d) - wJ**2
        bf2 = float(np.triu(pair, 1).sum())
        assert e1 == pytest.approx(bf1, rel=1e-11)
        assert e2 == pytest.approx(bf2, rel=1e-10)

    def test_normalization_interval(self):
        res = janossy_normalization(SPEC, Window.interval(0.0, 1.0), 40)
        assert res.total == pytest.approx(1.0, abs=1e-9)
        assert res.next_term < 1e-8
        assert res.terms_used >= 3

    def test_normalization_two_rule_route(self):
        res = janossy_normalization(
            SPEC, Window.interval(0.0, 1.0), 60, integration_nodes=80
        )
        assert res.total == pytest.approx(1.0, abs=1e-4)

    def test_normalization_square(self):
        spec2 = FiniteRangeFourier(0.6, 0.7, dimension=2)
        res = janossy_normalization(spec2, Window.box((0.0, 0.0), (1.0, 1.0)), 12)
        assert res.total == pytest.approx(1.0, abs=1e-6)


class TestCompoundIntensity:
    window = Window.interval(0.0, 6.0)
    disc = discretize(SPEC, "K", window, 100)

    def test_empty_added_is_one(self):
        given = Configuration([(1.0,), (4.0,)])
        r = compound_intensity(SPEC, self.window, 100, Configuration.empty(1), given, disc=self.disc)
        assert r.value == pytest.approx(1.0, rel=1e-12)

    def test_empty_given_is_determinant(self):
        added = Configuration([(2.0,), (3.5,)])
        r = compound_intensity(SPEC, self.window, 100, added, Configuration.empty(1), disc=self.disc)
        block = interaction_values(self.disc, added.coords)
        assert r.value == pytest.approx(float(np.linalg.det(block)), rel=1e-10)

    def test_diagonal_bound_and_monotonicity(self):
        rng = stream(123, 0)
        for trial in range(50):
            pts = np.sort(rng.uniform(0.2, 5.8, size=4))
            if np.diff(pts).min() < 1e-6:
                continue
            a = Configuration([(pts[0],)])
            others = [Configuration([(p,)]) for p in pts[1:]]
            xi2 = Configuration([(pts[1],), (pts[2],)])
            xi3 = Configuration([(pts[1],), (pts[2],), (pts[3],)])
            c2 = compound_intensity(SPEC, self.window, 100, a, xi2, disc=self.disc).value
            c3 = compound_intensity(SPEC, self.window, 100, a, xi3, disc=self.disc).value
            bound = float(
                interaction_values(self.disc, a.coords)[0, 0]
            )
            assert c3 <= c2 + 1e-9
            assert c2 <= bound + 1e-9

    def test_chain_rule_telescopes(self):
        added = Configuration([(1.2,), (2.8,)])
        given = Configuration([(0.4,), (4.4,)])
        joint = compound_intensity(SPEC, self.window, 100, added, given, disc=self.disc).value
        prod = chain_rule_product(SPEC, self.window, 100, added, given, disc=self.disc)
        assert joint == pytest.approx(prod, rel=1e-9)

    def test_near_coincident_cluster_stays_monotone(self):
        # three points within 3e-3 push the stacked matrix past float64
        # slogdet (rcond ~ 1e-17); the exact-arithmetic route must still
        # order the ratios correctly
        fr_disc = discretize(FR, "K", self.window, 100)
        added = Configuration([(1.682901480186717,)])
        eta = Configuration(
            [
                (0.8021827446720384,),
                (0.8654101828302503,),
                (0.8666338876903683,),
                (0.868215301915124,),
                (2.621641411449126,),
                (4.717198611239356,),
            ]
        )
        xi = Configuration(
            [(0.8021827446720384,), (0.8654101828302503,), (0.868215301915124,)]
        )
        c_eta = compound_intensity(FR, self.window, 100, added, eta, disc=fr_disc).value
        c_xi = compound_intensity(FR, self.window, 100, added, xi, disc=fr_disc).value
        diag = float(interaction_values(fr_disc, added.coords)[0, 0])
        # reference value from 60-digit determinants of the same entries
        assert c_eta == pytest.approx(0.725700980909, rel=1e-9)
        assert c_xi >= c_eta - 1e-12
        assert c_eta <= diag + 1e-12

    def test_exact_determinant_matches_lapack_when_well_conditioned(self):
        from dpplab.densities import _det_fraction, _log_of_fraction
        from fractions import Fraction

        rng = stream(7, 0)
        b = rng.normal(size=(6, 6))
        spd = b @ b.T + 6 * np.eye(6)
        exact = float(_det_fraction(spd))
        assert exact == pytest.approx(float(np.linalg.det(spd)), rel=1e-12)
        assert _log_of_fraction(Fraction(10) ** 500) == pytest.approx(
            500 * math.log(10), rel=1e-13
        )
        assert _log_of_fraction(Fraction(0)) == float("-inf")
        assert _log_of_fraction(Fraction(-3, 7)) == float("-inf")
        # positive but below the underflow floor collapses to zero-by-convention
        assert _log_of_fraction(Fraction(1, 10 ** 400)) == float("-inf")


class TestCandidatesAndClusters:
    def test_candidate_sequence_non_increasing(self):
        added = Configuration([(10.0,)])
        given = Configuration([(8.5,), (11.2,), (3.0,), (17.0,)])
        windows = [Window.interval(10.0 - h, 10.0 + h) for h in (2.0, 4.0, 8.0, 10.0)]
        vals = candidate_sequence(SPEC, added, given, windows)
        assert np.all(np.diff(vals) <= 1e-12)

    def test_candidate_restricts_given(self):
        added = Configuration([(10.0,)])
        given = Configuration([(8.5,), (17.0,)])
        small = Window.interval(9.0, 11.0)
        r = candidate_intensity(SPEC, added, given, small)
        # only the in-window neighbor matters
        direct = candidate_intensity(SPEC, added, Configuration([(8.5,)]), small)
        assert r.value == pytest.approx(direct.value, rel=1e-12)

    def test_cluster_equals_full_ratio(self):
        added = Configuration([(6.0,)])
        given = Configuration([(5.4,), (6.7,), (7.5,), (9.2,), (1.1,), (1.9,)])
        window = Window.interval(0.0, 12.0)
        cl = cluster_intensity(FR, added, given).value
        cand = candidate_intensity(FR, added, given, window).value
        assert cl == pytest.approx(cand, rel=1e-12)

    def test_cluster_ignores_far_points(self):
        added = Configuration([(6.0,)])
        near = Configuration([(5.6,), (6.5,)])
        far = Configuration([(5.6,), (6.5,), (0.3,), (11.8,)])
        a = cluster_intensity(FR, added, near).value
        b = cluster_intensity(FR, added, far).value
        assert a == pytest.approx(b, rel=1e-14)

    def test_cluster_needs_finite_range(self):
        with pytest.raises(NoFiniteRange):
            cluster_intensity(SPEC, Configuration([(0.0,)]), Configuration([(1.0,)]))


class TestConditionalKernel:
    def test_schur_matches_determinant_ratio(self):
        outer = Window.interval(0.0, 8.0)
        inner = Window.interval(3.0, 5.0)
        given = Configuration([(1.0,), (2.2,), (6.1,), (7.4,)])
        disc = discretize(SPEC, "K", outer, 120)
        ck = conditional_kernel(SPEC, inner, outer, 120, given, disc=disc)
        alpha = Configuration([(3.4,), (4.6,)])
        direct = compound_intensity(
            SPEC, outer, 120, alpha, given, disc=disc
        ).value
        via_kernel = float(np.linalg.det(ck.matrix(alpha)))
        assert via_kernel == pytest.approx(direct, rel=1e-9)

    def test_rejects_given_inside_inner(self):
        with pytest.raises(DomainError):
            conditional_kernel(
                SPEC,
                Window.interval(3.0, 5.0),
                Window.interval(0.0, 8.0),
                60,
                Configuration([(4.0,)]),
            )

    def test_rejects_inner_outside_outer(self):
        with pytest.raises(DomainError):
            conditional_kernel(
                SPEC,
                Window.interval(-1.0, 5.0),
                Window.interval(0.0, 8.0),
                60,
                Configuration.empty(1),
            )

    def test_empty_given_reduces_to_plain_interaction(self):
        outer = Window.interval(0.0, 8.0)
        inner = Window.interval(3.0, 5.0)
        disc = discretize(SPEC, "K", outer, 100)
        ck = conditional_kernel(SPEC, inner, outer, 100, Configuration.empty(1), disc=disc)
        pts = np.array([[3.5], [4.5]])
        assert np.allclose(ck.values(pts), interaction_values(disc, pts), atol=1e-12)
