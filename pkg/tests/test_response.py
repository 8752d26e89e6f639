"""Slope formulas, cumulant truncation, Newton cooling, weak coupling."""

import math

import numpy as np
import pytest

from nlsthermo.core import (
    GibbsMatrix,
    InvalidInputError,
    LevelSystem,
    TransitionMatrix,
    make_gibbs_state,
)
from nlsthermo.fluctuation import heat_and_entropy_change
from nlsthermo.genrand import random_gibbs_instance
from nlsthermo.response import (
    PerturbationGenerator,
    clausius_equality_residual,
    cumulant_check,
    cumulant_deviation,
    entropy_slope_numeric,
    newton_cooling_coefficient,
    perturbed_matrix,
    random_perturbation,
    slope_bundle,
    slope_direct,
    slope_fluctuation,
    slope_numeric,
    slope_symmetrized,
    weak_coupling_residual,
)
from nlsthermo.spinboson import spin1_gibbs_matrix

EPS_GRID = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


def identity_gibbs(beta0=1.0):
    system = LevelSystem([0.3, -1.2, 2.0], [1, 1, 1])
    return GibbsMatrix(TransitionMatrix(np.eye(3)), system, beta0)


class TestSlopeRoutes:
    def test_identity_matrix_has_zero_slope(self):
        G = identity_gibbs()
        assert slope_direct(G) == 0.0
        assert slope_symmetrized(G) == 0.0
        assert slope_fluctuation(G) == 0.0
        assert abs(slope_numeric(G)) <= 1e-12

    def test_zero_bath_beta_kills_the_prefactor(self):
        # a doubly stochastic matrix fixes the uniform state, which is the
        # Gibbs state at beta0 = 0 for unit degeneracies
        system = LevelSystem([0.4, -0.3, 1.1], [1, 1, 1])
        T = TransitionMatrix(np.array([
            [0.6, 0.3, 0.1],
            [0.3, 0.4, 0.3],
            [0.1, 0.3, 0.6],
        ]))
        G = GibbsMatrix(T, system, beta0=0.0)
        assert slope_direct(G) == 0.0

    def test_two_level_hand_expansion(self):
        beta0 = 1.0
        system = LevelSystem([0.0, 1.0], [1, 1])
        p0 = make_gibbs_state(system, beta0).probabilities.weights
        a = 0.3
        b = a * p0[0] / p0[1]
        T = TransitionMatrix(np.array([[1.0 - a, b], [a, 1.0 - b]]))
        G = GibbsMatrix(T, system, beta0)
        expected = 0.5 * beta0 * (T.entries[0, 1] * p0[1] + T.entries[1, 0] * p0[0])
        assert slope_fluctuation(G) == pytest.approx(expected, rel=1e-12)
        assert slope_direct(G) == pytest.approx(expected, rel=1e-12)
        assert slope_symmetrized(G) == pytest.approx(expected, rel=1e-12)

    def test_symmetrized_form_is_nonnegative_by_construction(self):
        for seed in range(10):
            G = random_gibbs_instance(2 + seed, seed).gibbs()
            assert slope_symmetrized(G) >= 0.0

    def test_spin_boson_routes_agree(self):
        G = spin1_gibbs_matrix(1.0)
        direct = slope_direct(G)
        assert slope_fluctuation(G) == pytest.approx(direct, rel=1e-9)
        assert slope_symmetrized(G) == pytest.approx(direct, rel=1e-9)
        assert slope_numeric(G, h=1e-4) == pytest.approx(direct, abs=1e-6)

    def test_random_instances_validate_as_bundles(self):
        for seed in range(30):
            G = random_gibbs_instance(2 + seed % 8, 900 + seed).gibbs()
            bundle = slope_bundle(G)
            scale = max(1.0, abs(bundle.direct))
            assert abs(bundle.direct - bundle.symmetrized) <= 1e-9 * scale
            assert abs(bundle.direct - bundle.fluctuation) <= 1e-9 * scale
            assert abs(bundle.direct - bundle.numeric) <= 1e-4 * scale

    def test_finite_difference_converges_at_second_order(self):
        G = random_gibbs_instance(5, 321).gibbs()
        exact = slope_direct(G)
        h = 1e-3
        err_h = abs(slope_numeric(G, h) - exact)
        err_half = abs(slope_numeric(G, h / 2) - exact)
        assert 3.0 <= err_h / err_half <= 5.0

    def test_step_outside_window_is_rejected(self):
        G = spin1_gibbs_matrix(1.0)
        with pytest.raises(InvalidInputError):
            slope_numeric(G, h=1e-7)
        with pytest.raises(InvalidInputError):
            slope_numeric(G, h=0.5)


class TestFixedPointZeros:
    def test_heat_and_entropy_vanish_at_bath_temperature(self):
        for seed in (3, 14, 15):
            G = random_gibbs_instance(6, seed).gibbs()
            dq, ds = heat_and_entropy_change(G, G.beta0)
            assert abs(dq) <= 1e-12
            assert abs(ds) <= 1e-12

    def test_common_tangent(self):
        for seed in (1, 2):
            G = random_gibbs_instance(4, seed).gibbs()
            assert abs(slope_numeric(G) - entropy_slope_numeric(G)) <= 1e-4
        G = spin1_gibbs_matrix(1.0)
        assert abs(slope_numeric(G) - entropy_slope_numeric(G)) <= 1e-4


class TestCumulantTruncation:
    def test_zero_t_has_zero_deviation(self):
        G = spin1_gibbs_matrix(1.0)
        assert cumulant_deviation(G, 0.0) <= 1e-14

    def test_first_cumulant_vanishes_at_fixed_point(self):
        # log <e^{t dQ}> is approximately quadratic: deviation from the pure
        # second-order term stays cubic-small even with k1 dropped
        G = spin1_gibbs_matrix(1.0)
        t = 0.05
        from nlsthermo.core import delta_q_table, expectation, two_point_distribution
        dist = two_point_distribution(G.matrix, G.fixed_point)
        dq = expectation(dist, delta_q_table(G.system))
        assert abs(dq) <= 1e-14
        assert cumulant_deviation(G, t) <= 1e-4

    def test_large_t_is_rejected(self):
        with pytest.raises(InvalidInputError):
            cumulant_deviation(spin1_gibbs_matrix(1.0), 0.2)

    @pytest.mark.parametrize("build", [
        lambda: spin1_gibbs_matrix(1.0),
        lambda: random_gibbs_instance(5, 3).gibbs(),
    ])
    def test_residual_exponent_is_at_least_cubic(self, build):
        G = build()
        ts = [0.1, 0.05, 0.025, -0.1, -0.05, -0.025]
        residuals = [cumulant_deviation(G, t) for t in ts]
        exponent = np.polyfit(np.log(np.abs(ts)), np.log(residuals), 1)[0]
        assert exponent >= 2.5
        assert cumulant_check(G, ts) == max(residuals)


class TestNewtonCooling:
    def test_identity_has_zero_coefficient(self):
        assert newton_cooling_coefficient(identity_gibbs()) == 0.0

    def test_spin_boson_linear_law(self):
        G = spin1_gibbs_matrix(1.0)
        coef = newton_cooling_coefficient(G)
        assert coef == G.beta0 * slope_direct(G)
        tau0 = 1.0 / G.beta0

        def residual(delta):
            worst = 0.0
            for sign in (1.0, -1.0):
                tau = tau0 * (1.0 + sign * delta)
                dq, _ = heat_and_entropy_change(G, 1.0 / tau)
                worst = max(worst, abs(dq + coef * (tau - tau0)))
            return worst

        r1 = residual(1e-3)
        assert r1 <= 1e-5 * abs(coef)
        r2 = residual(5e-4)
        assert 3.0 <= r1 / r2 <= 5.0

    def test_requires_positive_bath_beta(self):
        system = LevelSystem([0.4, -0.3, 1.1], [1, 1, 1])
        T = TransitionMatrix(np.array([
            [0.6, 0.3, 0.1],
            [0.3, 0.4, 0.3],
            [0.1, 0.3, 0.6],
        ]))
        G = GibbsMatrix(T, system, beta0=0.0)
        with pytest.raises(InvalidInputError):
            newton_cooling_coefficient(G)


class TestWeakCoupling:
    def test_generator_requires_zero_column_sums(self):
        with pytest.raises(InvalidInputError, match="column sums"):
            PerturbationGenerator(np.array([[0.1, 0.0], [0.0, -0.1]]))

    def test_zero_eps_gives_zero_residual(self):
        gen = random_perturbation(4, 0)
        system = LevelSystem(np.linspace(-1, 1, 4), np.ones(4, dtype=np.int64))
        assert clausius_equality_residual(gen, system, beta=0.8, eps=0.0) == 0.0

    def test_zero_generator_gives_zero_residuals(self):
        gen = PerturbationGenerator(np.zeros((3, 3)))
        system = LevelSystem([0.0, 0.5, 1.0], [1, 1, 1])
        fit = weak_coupling_residual(gen, system, beta=0.7, eps_list=EPS_GRID)
        assert fit.residuals == (0.0,) * len(EPS_GRID)
        assert fit.exponent == math.inf

    def test_sampled_generators_admit_the_whole_unit_range(self):
        gen = random_perturbation(5, 7)
        for eps in (0.0, 0.5, 1.0):
            perturbed_matrix(gen, eps)

    def test_negative_entry_names_the_offending_eps(self):
        base = random_perturbation(4, 11)
        doubled = PerturbationGenerator(2.0 * base.t_matrix)
        perturbed_matrix(doubled, 0.3)
        with pytest.raises(InvalidInputError, match="0.9"):
            perturbed_matrix(doubled, 0.9)

    def test_residual_scales_quadratically(self):
        rng = np.random.default_rng(123)
        for k in range(8):
            n = 2 + k % 5
            gen = random_perturbation(n, 800 + k)
            system = LevelSystem(rng.uniform(-1, 1, n), np.ones(n, dtype=np.int64))
            beta = float(rng.uniform(0.2, 1.0))
            fit = weak_coupling_residual(gen, system, beta, EPS_GRID)
            assert 1.9 <= fit.exponent <= 2.1

    def test_fit_needs_positive_eps(self):
        gen = random_perturbation(3, 1)
        system = LevelSystem([0.0, 0.5, 1.0], [1, 1, 1])
        with pytest.raises(InvalidInputError):
            weak_coupling_residual(gen, system, 0.5, (0.0, 0.1))
