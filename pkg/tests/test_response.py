from fractions import Fraction

import numpy as np
import pytest

from dr_persuasion.model import ConsumerParams, MarketParams
from dr_persuasion.response import (
    best_response,
    expected_consumer_utility,
    response_coefficients,
    trustful_response,
)
from dr_persuasion.signalling import PosteriorBelief, posterior, posterior_means, random_policy
from dr_persuasion.verify import argmax_action_oracle
from gen_scenarios import S1, random_scenario

CON = ConsumerParams(u=1.0, c=2.0, y0=2.0)
MKT = MarketParams(k=1.0, beta=1.0, b=1.0)


def belief_at(qhat):
    """Degenerate belief at an arbitrary level (utility is affine in q)."""
    return PosteriorBelief((1.0,), qhat, 0, 1.0, (qhat,))


def test_coefficients_s1():
    coef = response_coefficients(CON, MKT)
    assert coef.intercept == 1.0 and coef.slope == 0.25


def test_infinitely_costly_effort_kills_response():
    assert response_coefficients(ConsumerParams(1.0, 1e9, 2.0), MKT).slope < 1e-9


def test_zero_intercept_when_utility_matches_price():
    con = ConsumerParams(u=MKT.k + 2 * MKT.beta * 2.0, c=2.0, y0=2.0)
    assert response_coefficients(con, MKT).intercept == 0.0


@pytest.mark.parametrize("qhat, expected", [(0.0, 1.0), (1.0, 0.75), (3 / 11, 41 / 44)])
def test_best_response_matches_grid_oracle(qhat, expected):
    oracle = argmax_action_oracle(CON, MKT, belief_at(qhat), -5.0, 5.0, 100_000)
    assert oracle == pytest.approx(expected, abs=1e-4)
    assert best_response(CON, MKT, qhat) == pytest.approx(expected, abs=1e-15)


def test_trustful_response_values():
    assert [trustful_response(CON, MKT, s) for s in (1.0, 0.0, 0.5)] == [0.75, 1.0, 0.875]


def hand_utility(u, c, y0, k, b, q, a):
    return u * (y0 - a) - Fraction(c, 2) * a * a - (k + b * (y0 - a - q)) * (y0 - a)


def test_expected_utility_hand_values():
    point = PosteriorBelief.point_mass((0.0, 1.0), 0)
    assert expected_consumer_utility(CON, MKT, point, 1.0) == -2.0
    assert hand_utility(1, 2, 2, 1, 1, 0, 1) == -2
    prior = PosteriorBelief((0.5, 0.5), 0.5, 0, 1.0, (0.0, 1.0))
    exact = sum(Fraction(1, 2) * hand_utility(1, 2, 2, 1, 1, q, 0) for q in (0, 1))
    assert exact == -3
    assert expected_consumer_utility(CON, MKT, prior, 0.0) == pytest.approx(float(exact), abs=1e-15)


def test_expected_utility_vectorizes():
    prior = PosteriorBelief((0.5, 0.5), 0.5, 0, 1.0, (0.0, 1.0))
    grid = np.linspace(-1, 2, 7)
    vec = expected_consumer_utility(CON, MKT, prior, grid)
    assert vec == pytest.approx([expected_consumer_utility(CON, MKT, prior, a) for a in grid])


def exact_expected_utility(con, mkt, belief, a):
    """Posterior expected utility on rationals, free of float round-off."""
    F = Fraction
    return sum(
        F(p) * hand_utility(F(con.u), F(con.c), F(con.y0), F(mkt.k), F(mkt.b), F(q), a)
        for p, q in zip(belief.probs, belief.support)
    )


def test_first_order_condition(rng):
    h = Fraction(1e-6)
    for _ in range(100):
        sc = random_scenario(rng)
        con, mkt, gen = sc.consumer, sc.market, sc.generation
        pol = random_policy(gen.m, int(rng.integers(1 << 31)), 0.7)
        for j in range(gen.m):
            belief = posterior(gen, pol, j)
            a = Fraction(best_response(con, mkt, belief.mean))
            deriv = (
                exact_expected_utility(con, mkt, belief, a + h)
                - exact_expected_utility(con, mkt, belief, a - h)
            ) / (2 * h)
            assert abs(deriv) < 1e-9


def test_first_order_condition_float_s1():
    for belief in (PosteriorBelief.point_mass((0.0, 1.0), 0), PosteriorBelief((0.5, 0.5), 0.5, 0, 1.0, (0.0, 1.0))):
        a = best_response(CON, MKT, belief.mean)
        h = 1e-6
        deriv = (
            expected_consumer_utility(CON, MKT, belief, a + h)
            - expected_consumer_utility(CON, MKT, belief, a - h)
        ) / (2 * h)
        assert abs(deriv) < 1e-9


def test_best_response_is_grid_argmax(rng):
    for _ in range(100):
        sc = random_scenario(rng)
        con, mkt, gen = sc.consumer, sc.market, sc.generation
        pol = random_policy(gen.m, int(rng.integers(1 << 31)), 0.7)
        j = int(np.argmax(gen.prior_array @ pol.matrix))
        belief = posterior(gen, pol, j)
        a = best_response(con, mkt, belief.mean)
        lo, hi = a - 10.0, a + 10.0
        oracle = argmax_action_oracle(con, mkt, belief, lo, hi, 2000)
        assert abs(oracle - a) <= (hi - lo) / 2000


def test_mean_action_does_not_depend_on_policy(rng):
    for _ in range(50):
        sc = random_scenario(rng)
        coef = response_coefficients(sc.consumer, sc.market)
        pol = random_policy(sc.generation.m, int(rng.integers(1 << 31)), 0.5)
        means, marg = posterior_means(sc.generation, pol)
        avg = marg @ coef.action(means)
        assert avg == pytest.approx(coef.intercept - coef.slope * sc.generation.mean, abs=1e-12)


def test_slope_bounds(rng):
    for b, c in rng.uniform(1e-3, 1e3, size=(200, 2)):
        slope = response_coefficients(ConsumerParams(1.0, c, 1.0), MarketParams(1.0, 1.0, b)).slope
        assert 0 < slope < 0.5


def test_s1_helper_is_worked_scenario():
    assert S1().consumer == CON and S1().market == MKT
