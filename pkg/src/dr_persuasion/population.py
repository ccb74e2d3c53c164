"""The n-consumer game sharing one public signal.

Consumer ``i`` pays ``k + b * n * (y0_bar - q_bar - a_bar)`` per unit, so every
action moves everyone's price. Its first-order condition is

    (b + c_i) a_i = e_i + b n (y0_bar - qbar_hat - a_bar),   e_i = k - u_i + b y0_i,

a linear system whose unique solution is affine in the posterior mean
``qbar_hat``. The average action falls with slope ``s / (1 + s)`` where
``s = sum_i b / (b + c_i)``.

The potential below carries ``n^2 / 2`` on its quadratic price term; that is
the coefficient for which its gradient matches every consumer's marginal
utility exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Scenario
from .signalling import (
    REACHABLE_TOL,
    SignalPolicy,
    no_info_policy,
    posterior_means,
    truth_policy,
)
from .tso import ObjectiveDecomposition, Regime, classify_sign, realized_cost, truth_threshold

SYSTEM = "system"
MEAN_RATIO = "mean_ratio"
SLOPE_VARIANTS = (SYSTEM, MEAN_RATIO)
ROBUSTNESS_SLACK = 1e-9


@dataclass(frozen=True)
class EquilibriumProfile:
    actions: np.ndarray
    average: float
    slope_hat: float
    intercept: float
    e_values: np.ndarray
    qbar_hat: float


@dataclass(frozen=True)
class PotentialValue:
    value: float


@dataclass(frozen=True)
class RobustnessReport:
    representative: float
    population: float
    holds: bool
    variant: str = SYSTEM


def e_values(scenario: Scenario) -> np.ndarray:
    mk = scenario.market
    return np.array([mk.k - c.u + mk.b * c.y0 for c in scenario.consumers])


def system_slope(costs, b: float) -> float:
    """Slope of the average equilibrium action in ``qbar_hat``."""
    s = float(np.sum(b / (b + np.asarray(costs, dtype=float))))
    return s / (1.0 + s)


def mean_ratio_slope(costs, b: float) -> float:
    """Per-capita variant ``c_hat / (1 + c_hat)`` with ``c_hat`` the mean of ``b/(b+c_i)``."""
    ch = float(np.mean(b / (b + np.asarray(costs, dtype=float))))
    return ch / (1.0 + ch)


def slope_hat(costs, b: float, variant: str = SYSTEM) -> float:
    if variant == SYSTEM:
        return system_slope(costs, b)
    if variant == MEAN_RATIO:
        return mean_ratio_slope(costs, b)
    raise ValueError(f"unknown slope variant {variant!r}")


def equilibrium_matrix(scenario: Scenario) -> np.ndarray:
    """Coefficient matrix of the first-order system, ``diag(b + c) + b * ones``."""
    b = scenario.market.b
    n = scenario.n
    return np.diag(b + scenario.costs) + b * np.ones((n, n))


def nash_equilibrium(scenario: Scenario, qbar_hat: float) -> EquilibriumProfile:
    """Unique Bayesian Nash equilibrium for a posterior mean ``qbar_hat``."""
    b = scenario.market.b
    n = scenario.n
    e = e_values(scenario)
    rhs = e + b * n * (scenario.y0_bar - qbar_hat)
    try:
        actions = np.linalg.solve(equilibrium_matrix(scenario), rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError("equilibrium system is singular; need b > 0 and c_i > 0") from exc
    actions.setflags(write=False)
    avg = float(np.mean(actions))
    lam = system_slope(scenario.costs, b)
    return EquilibriumProfile(
        actions=actions,
        average=avg,
        slope_hat=lam,
        intercept=avg + lam * qbar_hat,
        e_values=e,
        qbar_hat=float(qbar_hat),
    )


def consumer_expected_utility(scenario: Scenario, i: int, actions, qbar_hat: float) -> float:
    """Posterior expected utility of consumer ``i``.

    Utility is affine in generation, so the posterior expectation only needs
    the posterior mean.
    """
    actions = np.asarray(actions, dtype=float)
    mk = scenario.market
    con = scenario.consumers[i]
    n = scenario.n
    price = mk.k + mk.b * n * (scenario.y0_bar - qbar_hat - actions.mean())
    y = con.y0 - actions[i]
    return float(con.u * y - 0.5 * con.c * actions[i] ** 2 - price * y)


def potential_value(scenario: Scenario, actions, qbar_hat: float) -> PotentialValue:
    actions = np.asarray(actions, dtype=float)
    b = scenario.market.b
    n = scenario.n
    e = e_values(scenario)
    gap = scenario.y0_bar - actions.mean() - qbar_hat
    value = np.sum(e * actions - 0.5 * (b + scenario.costs) * actions**2) - 0.5 * n * n * b * gap**2
    return PotentialValue(float(value))


def potential_hessian(scenario: Scenario) -> np.ndarray:
    return -equilibrium_matrix(scenario)


def tso_cost_multi(scenario: Scenario, policy: SignalPolicy) -> float:
    """Exact expected TSO cost against the equilibrium of ``n`` Bayesian consumers."""
    gen = scenario.generation
    means, marg = posterior_means(gen, policy)
    reach = np.flatnonzero(marg >= REACHABLE_TOL)
    avg = np.array([nash_equilibrium(scenario, means[j]).average for j in reach])
    cell = realized_cost(
        scenario.market, gen.support_array[:, None], avg[None, :], scenario.y0_bar, scenario.n
    )
    weights = gen.prior_array[:, None] * policy.matrix[:, reach]
    return float(np.sum(weights * cell))


def decompose_multi(scenario: Scenario) -> ObjectiveDecomposition:
    """Constant plus ``n^2 * lam_hat * h(b)`` times ``E[qbar_hat^2]``.

    ``lambda_big`` holds the bracket ``(b - beta) + lam_hat (beta/2 - b)``,
    which equals :func:`h_function`.
    """
    mk = scenario.market
    gen = scenario.generation
    n = scenario.n
    base = nash_equilibrium(scenario, 0.0)
    lam = base.slope_hat
    d = scenario.y0_bar - base.intercept
    bracket = h_function(mk.b, mk.beta, lam)
    mean, second = gen.mean, gen.second_moment
    constant = (
        0.5 * mk.beta * n * n * second
        - mk.k * n * mean
        + (0.5 * mk.beta - mk.b) * n * n * (d * d + 2.0 * d * lam * mean)
        + (mk.b - mk.beta) * n * n * d * mean
    )
    return ObjectiveDecomposition(constant=constant, coefficient=n * n * lam * bracket, lambda_big=bracket)


def h_function(b: float, beta: float, slope_hat: float) -> float:
    """Truth-telling stays optimal while this is nonpositive."""
    return b * (1.0 - slope_hat) - beta * (1.0 - 0.5 * slope_hat)


def multi_threshold(scenario: Scenario, variant: str = SYSTEM) -> float:
    """Root of ``b -> h(b, beta, slope_hat(b))`` by bisection.

    ``h(beta/2) = -beta/2 < 0``; the upper end of the bracket doubles until
    ``h`` turns positive.
    """
    beta = scenario.market.beta
    costs = scenario.costs

    def h(b):
        return h_function(b, beta, slope_hat(costs, b, variant))

    lo, hi = 0.5 * beta, beta
    while h(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ArithmeticError("could not bracket the threshold")
    # bisect down to adjacent floats
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo if abs(h(lo)) <= abs(h(hi)) else hi


def representative_threshold(c_bar: float, beta: float) -> float:
    """Threshold of a single consumer with the population's mean effort cost."""
    return truth_threshold(beta, c_bar)


def robustness_check(scenario: Scenario, variant: str = SYSTEM) -> RobustnessReport:
    rep = representative_threshold(scenario.c_bar, scenario.market.beta)
    pop = multi_threshold(scenario, variant)
    return RobustnessReport(rep, pop, rep <= pop + ROBUSTNESS_SLACK, variant)


def multi_regime(scenario: Scenario) -> tuple[Regime, float]:
    mk = scenario.market
    h = h_function(mk.b, mk.beta, system_slope(scenario.costs, mk.b))
    return classify_sign(h), h


def optimal_policy_multi(scenario: Scenario) -> SignalPolicy:
    regime, _ = multi_regime(scenario)
    m = scenario.generation.m
    return no_info_policy(m) if regime is Regime.NO_INFO else truth_policy(m)
