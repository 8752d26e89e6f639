"""J-equation identities and the second-law-like inequality checks."""

import math

import numpy as np
import pytest

from nlsthermo.core import (
    InvalidInputError,
    LevelSystem,
    ProbabilityVector,
    TransitionMatrix,
    entropy,
    make_gibbs_state,
    propagate,
)
from nlsthermo.fluctuation import (
    bistochastic_work_check,
    clausius_bounds,
    compare,
    entropy_flow_check,
    general_j_expectation,
    heat_and_entropy_change,
    heat_flow_check,
    j_heat_expectation,
    kl_monotonicity_check,
)
from nlsthermo.genrand import random_gibbs_instance, random_stochastic
from nlsthermo.spinboson import spin1_gibbs_matrix


def positive_distribution(n, rng):
    w = rng.uniform(0.05, 1.0, size=n)
    return w / w.sum()


def general_j_oracle(T, p, p0, ptilde):
    """Independent double sum with compensated accumulation."""
    t = T.entries
    q0 = [math.fsum(float(t[j, i]) * float(p0[i]) for i in range(t.shape[1]))
          for j in range(t.shape[0])]
    terms = []
    for j in range(t.shape[0]):
        for i in range(t.shape[1]):
            if t[j, i] > 0.0:
                terms.append(float(t[j, i]) * float(p[i]) * float(p0[i])
                             * float(ptilde[j]) / (q0[j] * float(p[i])))
    return math.fsum(terms)


def j_heat_oracle(G, beta):
    """Direct summation of T[m,n] p_n exp(-(beta-beta0)(E_m - E_n))."""
    t = G.matrix.entries
    e = G.system.energies
    p = make_gibbs_state(G.system, beta).probabilities.weights
    dbeta = beta - G.beta0
    return math.fsum(
        float(t[m, n]) * float(p[n]) * math.exp(-dbeta * float(e[m] - e[n]))
        for m in range(t.shape[0]) for n in range(t.shape[1]))


class TestInequalityReport:
    def test_holds_tracks_slack(self):
        assert compare("x", 0.0, 1.0).holds
        assert compare("x", 0.0, -1e-13).holds
        assert not compare("x", 0.0, -1e-11).holds
        report = compare("x", 2.0, 5.0)
        assert report.slack == 3.0


class TestGeneralJEquation:
    def test_identity_matrix_is_exact(self):
        T = TransitionMatrix(np.eye(4))
        p = ProbabilityVector([0.25, 0.25, 0.25, 0.25])
        p0 = ProbabilityVector([0.5, 0.25, 0.125, 0.125])
        ptilde = ProbabilityVector([0.125, 0.125, 0.25, 0.5])
        assert general_j_expectation(T, p, p0, ptilde) == 1.0

    def test_random_positive_instances_match_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            T = random_stochastic(5, rng.integers(1 << 31))
            p = positive_distribution(5, rng)
            p0 = positive_distribution(5, rng)
            ptilde = positive_distribution(5, rng)
            value = general_j_expectation(T, p, p0, ptilde)
            assert abs(value - 1.0) <= 1e-12
            assert value == pytest.approx(
                general_j_oracle(T, p, p0, ptilde), abs=5e-14)

    def test_propagated_ptilde_feeds_the_clausius_route(self):
        inst = random_gibbs_instance(6, 13)
        G = inst.gibbs()
        p = make_gibbs_state(G.system, 2.2).probabilities
        q = propagate(G.matrix, p)
        value = general_j_expectation(G.matrix, p, G.fixed_point, q)
        assert abs(value - 1.0) <= 1e-12

    def test_rejects_zero_entries(self):
        T = TransitionMatrix(np.eye(2))
        good = ProbabilityVector([0.5, 0.5])
        dead = ProbabilityVector([1.0, 0.0])
        with pytest.raises(InvalidInputError, match="p must"):
            general_j_expectation(T, dead, good, good)
        with pytest.raises(InvalidInputError, match="p0"):
            general_j_expectation(T, good, dead, good)


class TestHeatJEquation:
    def test_equal_temperatures(self):
        G = random_gibbs_instance(5, 3).gibbs()
        assert j_heat_expectation(G, G.beta0) == pytest.approx(1.0, abs=1e-13)

    def test_spin_boson_example(self):
        G = spin1_gibbs_matrix(1.0)
        value = j_heat_expectation(G, 2.0)
        assert abs(value - 1.0) <= 1e-10
        assert value == pytest.approx(j_heat_oracle(G, 2.0), abs=1e-12)

    def test_random_instance_negative_beta(self):
        G = random_gibbs_instance(8, 21).gibbs()
        value = j_heat_expectation(G, -3.0)
        assert abs(value - 1.0) <= 1e-10
        assert value == pytest.approx(j_heat_oracle(G, -3.0), abs=1e-11)

    def test_agrees_with_general_j_specialization(self):
        # ptilde = p with the Gibbs fixed point: the same expectation through
        # the probability-ratio route
        for seed in (5, 6):
            G = random_gibbs_instance(4, seed).gibbs()
            for beta in (-4.0, 0.3, 2.5):
                p = make_gibbs_state(G.system, beta).probabilities
                via_ratio = general_j_expectation(G.matrix, p, G.fixed_point, p)
                via_heat = j_heat_expectation(G, beta)
                assert via_ratio == pytest.approx(via_heat, abs=1e-12)

    def test_thousand_certified_instances_across_the_wide_range(self):
        # identity and route agreement over 1000 instances, beta in [-10, 10]
        rng = np.random.default_rng(271828)
        worst_identity = worst_route_gap = 0.0
        for k in range(1000):
            G = random_gibbs_instance(2 + k % 15, 70_000 + k).gibbs()
            beta = float(rng.uniform(-10.0, 10.0))
            via_heat = j_heat_expectation(G, beta)
            worst_identity = max(worst_identity, abs(via_heat - 1.0))
            p = make_gibbs_state(G.system, beta).probabilities
            via_ratio = general_j_expectation(G.matrix, p, G.fixed_point, p)
            worst_route_gap = max(worst_route_gap, abs(via_ratio - via_heat))
        assert worst_identity <= 1e-10
        assert worst_route_gap <= 1e-12


class TestHeatFlow:
    def test_zero_at_equal_temperatures(self):
        G = random_gibbs_instance(4, 2).gibbs()
        report = heat_flow_check(G, G.beta0)
        assert report.holds
        assert abs(report.rhs) <= 1e-13

    def test_hotter_system_loses_heat(self):
        G = spin1_gibbs_matrix(1.0)
        dq, _ = heat_and_entropy_change(G, 0.5)
        assert dq <= 0.0
        assert heat_flow_check(G, 0.5).holds

    def test_colder_system_gains_heat(self):
        G = random_gibbs_instance(5, 15).gibbs()
        dq, _ = heat_and_entropy_change(G, 2.0 * G.beta0)
        assert dq >= 0.0
        assert heat_flow_check(G, 2.0 * G.beta0).holds


class TestClausiusBounds:
    def test_common_zero_at_bath_temperature(self):
        G = spin1_gibbs_matrix(1.0)
        bounds = clausius_bounds(G, 1.0)
        assert abs(bounds.beta0_heat) <= 1e-12
        assert abs(bounds.entropy_increase) <= 1e-12
        assert abs(bounds.beta_heat) <= 1e-12

    def test_spin_boson_strict_ordering(self):
        bounds = clausius_bounds(spin1_gibbs_matrix(1.0), 3.0)
        assert bounds.lower.holds and bounds.upper.holds
        assert bounds.lower.slack > 1e-6
        assert bounds.upper.slack > 1e-6

    def test_negative_beta_keeps_ordering_with_opposite_heat_terms(self):
        G = random_gibbs_instance(4, 44).gibbs()
        bounds = clausius_bounds(G, -5.0 * G.beta0)
        assert bounds.lower.holds and bounds.upper.holds
        # at negative beta the two heat terms bracket with opposite signs
        assert bounds.beta0_heat <= 0.0 <= bounds.beta_heat


class TestEntropyFlow:
    def test_zero_at_equal_temperatures(self):
        G = random_gibbs_instance(3, 9).gibbs()
        report = entropy_flow_check(G, G.beta0)
        assert report.holds
        assert abs(report.rhs) <= 1e-13

    def test_hotter_system_loses_entropy(self):
        G = spin1_gibbs_matrix(1.0)
        _, ds = heat_and_entropy_change(G, 0.1)
        assert ds <= 0.0
        assert entropy_flow_check(G, 0.1).holds

    def test_colder_system_gains_entropy(self):
        G = random_gibbs_instance(6, 30).gibbs()
        _, ds = heat_and_entropy_change(G, 4.0 * G.beta0)
        assert ds >= 0.0
        assert entropy_flow_check(G, 4.0 * G.beta0).holds

    def test_negative_beta_is_outside_the_hypothesis(self):
        G = random_gibbs_instance(3, 1).gibbs()
        with pytest.raises(InvalidInputError):
            entropy_flow_check(G, -0.5)


class TestKlMonotonicity:
    def test_identity_map_is_equality(self):
        T = TransitionMatrix(np.eye(3))
        p = ProbabilityVector([0.2, 0.5, 0.3])
        p0 = ProbabilityVector([0.4, 0.4, 0.2])
        report = kl_monotonicity_check(T, p, p0)
        assert report.holds
        assert abs(report.slack) <= 1e-14

    def test_rank_one_map_contracts_fully(self):
        v = np.array([0.3, 0.3, 0.4])
        T = TransitionMatrix(np.tile(v[:, None], (1, 3)))
        p = ProbabilityVector([0.2, 0.5, 0.3])
        p0 = ProbabilityVector([0.4, 0.4, 0.2])
        report = kl_monotonicity_check(T, p, p0)
        assert report.lhs <= 1e-14
        assert report.holds

    def test_random_triples_hold(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            T = random_stochastic(6, rng.integers(1 << 31))
            p = positive_distribution(6, rng)
            p0 = positive_distribution(6, rng)
            assert kl_monotonicity_check(T, p, p0).holds

    def test_requires_strict_positivity(self):
        T = TransitionMatrix(np.eye(2))
        with pytest.raises(InvalidInputError):
            kl_monotonicity_check(T, ProbabilityVector([1.0, 0.0]),
                                  ProbabilityVector([0.5, 0.5]))


def permutation_mixture(n, k, rng):
    weights = rng.uniform(size=k)
    weights /= weights.sum()
    entries = np.zeros((n, n))
    for w in weights:
        entries += w * np.eye(n)[rng.permutation(n)]
    return TransitionMatrix(entries)


class TestBistochasticLimit:
    def test_permutation_leaves_entropy_unchanged(self):
        system = LevelSystem([0.0, 1.0, 2.0], [1, 1, 1])
        perm = TransitionMatrix(np.eye(3)[[2, 0, 1]])
        first, second = bistochastic_work_check(perm, system, beta=1.0)
        assert abs(first.rhs) <= 1e-13
        assert first.holds and second.holds

    def test_uniform_matrix_maximizes_entropy(self):
        system = LevelSystem([0.0, 0.5, 1.0, 2.0], [1, 1, 1, 1])
        T = TransitionMatrix(np.full((4, 4), 0.25))
        beta = 1.2
        p = make_gibbs_state(system, beta).probabilities
        first, second = bistochastic_work_check(T, system, beta)
        expected = math.log(4) - entropy(system, p)
        assert first.rhs == pytest.approx(expected, rel=1e-12)
        assert first.holds and second.holds

    def test_random_mixtures_hold(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 9))
            system = LevelSystem(rng.normal(size=n), np.ones(n, dtype=np.int64))
            T = permutation_mixture(n, 5, rng)
            first, second = bistochastic_work_check(T, system, beta=1.0)
            assert first.holds and second.holds

    def test_rejects_non_bistochastic(self):
        inst = random_gibbs_instance(4, 3)
        system = LevelSystem(np.zeros(4), np.ones(4, dtype=np.int64))
        with pytest.raises(InvalidInputError, match="bi-stochastic"):
            bistochastic_work_check(inst.matrix, system, beta=1.0)

    def test_rejects_degenerate_levels(self):
        system = LevelSystem([0.0, 1.0], [2, 1])
        T = TransitionMatrix(np.eye(2))
        with pytest.raises(InvalidInputError, match="degenerac"):
            bistochastic_work_check(T, system, beta=1.0)

    def test_rejects_negative_beta(self):
        system = LevelSystem([0.0, 1.0], [1, 1])
        T = TransitionMatrix(np.eye(2))
        with pytest.raises(InvalidInputError, match="beta"):
            bistochastic_work_check(T, system, beta=-0.5)
