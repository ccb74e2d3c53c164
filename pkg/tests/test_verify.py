from dataclasses import replace

import numpy as np
import pytest

from dr_persuasion.model import GenerationModel
from dr_persuasion.population import tso_cost_multi
from dr_persuasion.signalling import (
    PosteriorBelief,
    no_info_policy,
    posterior_mean_square,
    random_policy,
    truth_policy,
)
from dr_persuasion.tso import trustful_optimal_signal, tso_cost
from dr_persuasion.verify import (
    IDENTITIES,
    argmax_action_oracle,
    candidate_policies,
    identity_residuals,
    identity_suite,
    monte_carlo_cost,
    policy_search,
    trustful_signal_oracle,
)
from gen_scenarios import S1, random_scenario


def test_argmax_oracle_s1(s1):
    for qhat, expected in ((0.0, 1.0), (1.0, 0.75)):
        belief = PosteriorBelief((1.0,), qhat, 0, 1.0, (qhat,))
        assert argmax_action_oracle(s1.consumer, s1.market, belief) == pytest.approx(expected, abs=1e-4)


def test_argmax_oracle_rejects_bad_grid(s1):
    belief = PosteriorBelief.point_mass((0.0, 1.0), 0)
    with pytest.raises(ValueError):
        argmax_action_oracle(s1.consumer, s1.market, belief, 1.0, 0.0)
    with pytest.raises(ValueError):
        argmax_action_oracle(s1.consumer, s1.market, belief, steps=10)


def test_candidates_are_deterministic_and_ordered():
    first = list(candidate_policies(3, 20, 5))
    second = list(candidate_policies(3, 20, 5))
    assert [label for label, _ in first] == [label for label, _ in second]
    assert all(p == q for (_, p), (_, q) in zip(first, second))
    assert [label for label, _ in first[:2]] == ["truth", "noinfo"]
    assert sum(label.startswith("deterministic:") for label, _ in first) == 27
    assert sum(label.startswith("random:") for label, _ in first) == 20


def test_search_s1_finds_truth(s1):
    rep = policy_search(s1, 1000, 42)
    assert rep.best_label == "truth"
    assert rep.best_policy == truth_policy(2)
    assert rep.gap == 0.0 and rep.passed


def test_search_above_threshold_finds_noinfo():
    sc = S1(1.3)
    rep = policy_search(sc, 1000, 42)
    noinfo = tso_cost(sc, no_info_policy(2))
    assert abs(rep.best_cost - noinfo) <= 1e-12
    assert rep.best_label == "noinfo"
    informative = rep.second_moments > sc.generation.mean**2 + 1e-9
    assert np.all(rep.costs[informative] > noinfo)


def test_search_single_state_has_zero_gap(s1):
    one = replace(s1, generation=GenerationModel((0.7,), (1.0,)))
    rep = policy_search(one, 50, 1)
    assert rep.gap == 0.0


def test_search_is_reproducible(s1):
    a, b = policy_search(s1.with_b(1.25), 200, 9), policy_search(s1.with_b(1.25), 200, 9)
    assert a.best_label == b.best_label and np.array_equal(a.costs, b.costs)
    with pytest.raises(ValueError):
        policy_search(s1, 0, 0)


def test_search_never_beats_closed_form(rng):
    for _ in range(10):
        sc = random_scenario(rng, n=int(rng.integers(1, 4)))
        assert policy_search(sc, 200, int(rng.integers(1 << 31))).passed


@pytest.mark.parametrize("policy", [truth_policy(2), no_info_policy(2)])
def test_monte_carlo_within_three_stderr(s1, policy):
    est = monte_carlo_cost(s1, policy, 1_000_000, 42)
    assert abs(est.estimate - tso_cost(s1, policy)) <= 3 * est.stderr


def test_monte_carlo_stderr_halves(s1):
    small = monte_carlo_cost(s1, truth_policy(2), 250_000, 7)
    big = monte_carlo_cost(s1, truth_policy(2), 1_000_000, 7)
    assert 1.6 <= small.stderr / big.stderr <= 2.4


def test_monte_carlo_single_state_is_exact(s1):
    one = replace(s1, generation=GenerationModel((0.3,), (1.0,)))
    est = monte_carlo_cost(one, truth_policy(1), 1000, 0)
    assert est.estimate == pytest.approx(tso_cost(one, truth_policy(1)), abs=1e-12)
    assert est.stderr == 0.0


def test_monte_carlo_edge_cases(s1):
    assert np.isnan(monte_carlo_cost(s1, truth_policy(2), 1, 0).stderr)
    with pytest.raises(ValueError):
        monte_carlo_cost(s1, truth_policy(2), 0, 0)
    a = monte_carlo_cost(s1, truth_policy(2), 5000, 3)
    assert a == monte_carlo_cost(s1, truth_policy(2), 5000, 3)


def test_monte_carlo_population(rng):
    sc = random_scenario(rng, n=3, m=3)
    pol = random_policy(3, 4, 1.0)
    est = monte_carlo_cost(sc, pol, 400_000, 11)
    assert abs(est.estimate - tso_cost_multi(sc, pol)) <= 4 * est.stderr


def test_identity_suite_random_policies(rng):
    for _ in range(10):
        sc = random_scenario(rng)
        pols = [random_policy(sc.generation.m, s, 0.5) for s in range(100)]
        report = identity_suite(sc, pols)
        assert set(report) == set(IDENTITIES)
        assert all(r.passed for r in report.values())


def test_identity_tightness(rng):
    for _ in range(20):
        sc = random_scenario(rng)
        gen = sc.generation
        scale = 1.0 + gen.second_moment
        assert abs(posterior_mean_square(gen, truth_policy(gen.m)) - gen.second_moment) < 1e-12 * scale
        assert abs(posterior_mean_square(gen, no_info_policy(gen.m)) - gen.mean**2) < 1e-12 * scale
        assert identity_residuals(sc, truth_policy(gen.m))["decomposition"] < 1e-10


def test_identity_suite_flags_bad_tolerance(s1):
    report = identity_suite(s1, [random_policy(2, 1)], tol=-1.0)
    assert not any(r.passed for r in report.values())


def test_trustful_oracle_matches_closed_form(rng):
    for _ in range(20):
        sc = random_scenario(rng)
        sc = sc.with_b(sc.market.beta)
        assert trustful_signal_oracle(sc) == trustful_optimal_signal(sc)
