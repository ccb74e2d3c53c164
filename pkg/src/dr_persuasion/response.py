"""Consumer best responses under a linear pricing contract.

With price ``k + b*(y0 - a - q)`` and quadratic effort cost, the consumer's
expected utility is concave in the action and its maximizer is affine in the
posterior mean of generation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ConsumerParams, MarketParams
from .signalling import PosteriorBelief


@dataclass(frozen=True)
class BestResponseCoefficients:
    intercept: float
    slope: float

    def action(self, qhat):
        return self.intercept - self.slope * qhat


def response_coefficients(consumer: ConsumerParams, market: MarketParams) -> BestResponseCoefficients:
    b, c = market.b, consumer.c
    denom = c + 2.0 * b
    return BestResponseCoefficients(
        intercept=(market.k + 2.0 * b * consumer.y0 - consumer.u) / denom,
        slope=b / denom,
    )


def best_response(consumer: ConsumerParams, market: MarketParams, qhat: float) -> float:
    """Optimal action given the posterior mean of generation.

    Negative values are consumption increases and are returned as is.
    """
    return response_coefficients(consumer, market).action(qhat)


def trustful_response(consumer: ConsumerParams, market: MarketParams, signal_value: float) -> float:
    """Action of a consumer who takes the signal for the true generation."""
    return response_coefficients(consumer, market).action(signal_value)


def consumer_utility(consumer: ConsumerParams, market: MarketParams, q, a):
    """Realized utility for generation ``q`` and action ``a`` (broadcasts)."""
    y = consumer.y0 - a
    price = market.k + market.b * (consumer.y0 - a - q)
    return consumer.u * y - 0.5 * consumer.c * a**2 - price * y


def expected_consumer_utility(
    consumer: ConsumerParams, market: MarketParams, belief: PosteriorBelief, a
):
    """Posterior expected utility of action ``a``; ``a`` may be an array."""
    q = np.asarray(belief.support, dtype=float)
    p = np.asarray(belief.probs, dtype=float)
    a = np.asarray(a, dtype=float)
    u = consumer_utility(consumer, market, q, a[..., None])
    out = u @ p
    return float(out) if out.ndim == 0 else out
