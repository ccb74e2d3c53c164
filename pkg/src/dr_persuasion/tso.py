"""The sender's side of the single-consumer game.

The TSO pays the production cost ``f(x) = k x + beta x^2 / 2`` of the residual
load ``x`` and collects ``p(x) = k + b x`` per unit consumed. Because the
consumer's response is affine in the posterior mean ``qhat``, the expected
cost of any policy is a constant plus a multiple of ``E[qhat^2]``; the sign of
that multiple decides between full revelation and no information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import ConsumerParams, MarketParams, Scenario
from .response import response_coefficients
from .signalling import (
    REACHABLE_TOL,
    SignalPolicy,
    no_info_policy,
    posterior_means,
    truth_policy,
)

REGIME_TOL = 1e-12


class Regime(str, Enum):
    TRUTH = "Truth"
    INDIFFERENT = "Indifferent"
    NO_INFO = "NoInfo"

    def __str__(self) -> str:
        return self.value


def classify_sign(value: float, tol: float = REGIME_TOL) -> Regime:
    if value < -tol:
        return Regime.TRUTH
    if value > tol:
        return Regime.NO_INFO
    return Regime.INDIFFERENT


def realized_cost(market: MarketParams, q, a, y0, n: int = 1):
    """TSO cost for per-capita generation ``q`` and per-capita action ``a``.

    ``y0`` is the (average) baseline consumption. With ``n`` consumers the
    residual load is ``n*(y0 - a - q)`` and billed consumption ``n*(y0 - a)``.
    """
    consumption = n * (y0 - a)
    x = consumption - n * q
    return market.k * x + 0.5 * market.beta * x**2 - (market.k + market.b * x) * consumption


@dataclass(frozen=True)
class ObjectiveDecomposition:
    """``J(policy) = constant + coefficient * E[qhat^2]``."""

    constant: float
    coefficient: float
    lambda_big: float

    def evaluate(self, second_moment: float) -> float:
        return self.constant + self.coefficient * second_moment


@dataclass(frozen=True)
class RegimeReport:
    b_bar: float
    regime: Regime
    lambda_big: float


def tso_cost(scenario: Scenario, policy: SignalPolicy) -> float:
    """Exact expected TSO cost against a Bayesian consumer (n=1)."""
    con = scenario.consumer
    gen = scenario.generation
    coef = response_coefficients(con, scenario.market)
    means, marg = posterior_means(gen, policy)
    reach = marg >= REACHABLE_TOL
    actions = coef.action(means)
    cell = realized_cost(scenario.market, gen.support_array[:, None], actions[None, :], con.y0)
    weights = gen.prior_array[:, None] * policy.matrix
    return float(np.sum(weights[:, reach] * cell[:, reach]))


def lambda_big(beta: float, b: float, slope: float) -> float:
    """Bracket whose sign decides the optimal policy: ``(b - beta) + slope*(beta/2 - b)``."""
    return -(beta - b) + slope * (0.5 * beta - b)


def decompose(scenario: Scenario) -> ObjectiveDecomposition:
    con = scenario.consumer
    mk = scenario.market
    gen = scenario.generation
    coef = response_coefficients(con, mk)
    lam = coef.slope
    big = lambda_big(mk.beta, mk.b, lam)
    d = con.y0 - coef.intercept  # billed consumption is d + lam*qhat
    mean, second = gen.mean, gen.second_moment
    constant = (
        0.5 * mk.beta * second
        - mk.k * mean
        + (0.5 * mk.beta - mk.b) * (d * d + 2.0 * d * lam * mean)
        + (mk.b - mk.beta) * d * mean
    )
    return ObjectiveDecomposition(constant=constant, coefficient=lam * big, lambda_big=big)


def truth_threshold(beta: float, c: float) -> float:
    """Largest pricing slope for which revealing the truth stays optimal.

    Positive root of ``b^2 + (c - 3 beta/2) b - beta c = 0``.
    """
    half = 0.75 * beta - 0.5 * c
    root = math.sqrt(half * half + beta * c)
    if half >= 0:
        return half + root
    # avoids cancellation for large c
    return beta * c / (root - half)


def threshold_residual(b: float, beta: float, c: float) -> float:
    """``lambda_b (beta/2 - b) + b - beta``; zero at the truth threshold."""
    lam = b / (c + 2.0 * b)
    return lam * (0.5 * beta - b) + b - beta


def classify_regime(market: MarketParams, consumer: ConsumerParams) -> RegimeReport:
    lam = response_coefficients(consumer, market).slope
    big = lambda_big(market.beta, market.b, lam)
    return RegimeReport(
        b_bar=truth_threshold(market.beta, consumer.c),
        regime=classify_sign(big),
        lambda_big=big,
    )


def optimal_policy(scenario: Scenario) -> SignalPolicy:
    """Truth below (and at) the threshold, no information above it."""
    report = classify_regime(scenario.market, scenario.consumer)
    m = scenario.generation.m
    if report.regime is Regime.NO_INFO:
        return no_info_policy(m)
    return truth_policy(m)


def trustful_reference_point(scenario: Scenario) -> float:
    con = scenario.consumer
    coef = response_coefficients(con, scenario.market)
    return (coef.intercept - con.y0) / coef.slope


def trustful_optimal_signal(scenario: Scenario) -> float:
    """Support endpoint farthest from the trustful consumer's reference point.

    Ties go to the upper endpoint.
    """
    ref = trustful_reference_point(scenario)
    lo, hi = scenario.generation.support[0], scenario.generation.support[-1]
    return hi if abs(hi - ref) >= abs(lo - ref) else lo


def trustful_cost(scenario: Scenario, signal_value: float) -> float:
    """Expected TSO cost when a trustful consumer always receives ``signal_value``."""
    con = scenario.consumer
    gen = scenario.generation
    a = response_coefficients(con, scenario.market).action(signal_value)
    return float(gen.prior_array @ realized_cost(scenario.market, gen.support_array, a, con.y0))
