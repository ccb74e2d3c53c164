"""Signal policies, Bayes updating and posterior statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import PROB_TOL, DimensionError, GenerationModel, ParseError, ValidationError, Violation

REACHABLE_TOL = 1e-15


def policy_violations(matrix) -> list[Violation]:
    """List the ways ``matrix`` fails to be a square row-stochastic matrix."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        return [Violation("matrix", f"policy must be a nonempty square matrix, got shape {a.shape}")]
    out = []
    if not np.all(np.isfinite(a)):
        return [Violation("matrix", "policy entries must be finite")]
    for i, row in enumerate(a):
        if np.any(row < 0) or np.any(row > 1):
            out.append(Violation(f"matrix[{i}]", "entries must lie in [0, 1]"))
        s = float(np.sum(row))
        if abs(s - 1.0) > PROB_TOL:
            out.append(Violation(f"matrix[{i}]", f"row {i} sums to {s:.12g}"))
    return out


class SignalPolicy:
    """Row-stochastic matrix: ``matrix[i, j]`` is the probability of sending
    signal ``j`` when generation is at support level ``i``.

    The signal alphabet is the generation support itself. Instances are
    immutable and validated on construction.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix):
        violations = policy_violations(matrix)
        if violations:
            raise ValidationError(violations)
        a = np.array(matrix, dtype=float)
        a.setflags(write=False)
        self._matrix = a

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def m(self) -> int:
        return self._matrix.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, SignalPolicy) and np.array_equal(self._matrix, other._matrix)

    def __hash__(self) -> int:
        return hash(self._matrix.tobytes())

    def __repr__(self) -> str:
        return f"SignalPolicy({self._matrix.tolist()!r})"

    def tolist(self) -> list[list[float]]:
        return self._matrix.tolist()

    def check_dimension(self, gen: GenerationModel) -> None:
        if self.m != gen.m:
            raise DimensionError(f"policy is {self.m}x{self.m} but the support has {gen.m} levels")


def truth_policy(m: int) -> SignalPolicy:
    """Full revelation: the signal is the realized generation level."""
    return SignalPolicy(np.eye(m))


def no_info_policy(m: int) -> SignalPolicy:
    return SignalPolicy(np.full((m, m), 1.0 / m))


def constant_policy(m: int, j: int) -> SignalPolicy:
    if not 0 <= j < m:
        raise IndexError(f"signal index {j} out of range for m={m}")
    a = np.zeros((m, m))
    a[:, j] = 1.0
    return SignalPolicy(a)


def random_policy(m: int, seed: int, concentration: float = 1.0) -> SignalPolicy:
    """Draw each row from a symmetric Dirichlet distribution.

    Args:
        m: support size.
        seed: seed for ``numpy.random.default_rng``; equal seeds give equal policies.
        concentration: Dirichlet parameter. Small values give near-deterministic
            rows, large values approach uniform rows.
    """
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    rng = np.random.default_rng(seed)
    rows = rng.dirichlet(np.full(m, float(concentration)), size=m)
    # tiny concentrations can underflow every gamma draw in a row
    bad = ~np.isfinite(rows).all(axis=1) | (rows.sum(axis=1) <= 0)
    for i in np.flatnonzero(bad):
        rows[i] = 0.0
        rows[i, rng.integers(m)] = 1.0
    rows /= rows.sum(axis=1, keepdims=True)
    return SignalPolicy(rows)


def load_policy(path: str | Path) -> SignalPolicy:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed policy JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"matrix"}:
        raise ParseError('policy file must be an object with the single key "matrix"')
    matrix = doc["matrix"]
    if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
        raise ParseError("matrix: expected an array of arrays")
    if len({len(r) for r in matrix}) > 1:
        raise ParseError("matrix: rows have different lengths")
    return SignalPolicy(matrix)


def save_policy(policy: SignalPolicy, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"matrix": policy.tolist()}) + "\n")


@dataclass(frozen=True)
class PosteriorBelief:
    """Consumer belief over the generation support after observing a signal."""

    probs: tuple[float, ...]
    mean: float
    signal_index: int
    marginal: float
    support: tuple[float, ...]
    reachable: bool = True

    @classmethod
    def point_mass(cls, support, i: int) -> "PosteriorBelief":
        support = tuple(float(x) for x in support)
        probs = tuple(1.0 if k == i else 0.0 for k in range(len(support)))
        return cls(probs, support[i], i, 1.0, support)


def signal_marginals(gen: GenerationModel, policy: SignalPolicy) -> np.ndarray:
    """Probability of each signal under prior x policy."""
    policy.check_dimension(gen)
    return gen.prior_array @ policy.matrix


def posterior_means(gen: GenerationModel, policy: SignalPolicy) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean of generation for every signal.

    Returns:
        ``(means, marginals)``. Unreachable signals get the prior mean.
    """
    marg = signal_marginals(gen, policy)
    joint = gen.prior_array[:, None] * policy.matrix
    reach = marg >= REACHABLE_TOL
    means = np.full(gen.m, gen.mean)
    means[reach] = (gen.support_array @ joint[:, reach]) / marg[reach]
    return means, marg


def posterior(gen: GenerationModel, policy: SignalPolicy, j: int) -> PosteriorBelief:
    """Bayes posterior after observing signal ``j``.

    A signal with zero marginal probability is flagged unreachable and
    carries the prior; it has zero weight in every expectation.
    """
    policy.check_dimension(gen)
    if not 0 <= j < gen.m:
        raise IndexError(f"signal index {j} out of range for m={gen.m}")
    weights = policy.matrix[:, j] * gen.prior_array
    marg = float(weights.sum())
    if marg < REACHABLE_TOL:
        return PosteriorBelief(gen.prior, gen.mean, j, marg, gen.support, reachable=False)
    probs = weights / marg
    mean = float(np.clip(probs @ gen.support_array, gen.support[0], gen.support[-1]))
    return PosteriorBelief(tuple(probs.tolist()), mean, j, marg, gen.support)


def posterior_mean_square(gen: GenerationModel, policy: SignalPolicy) -> float:
    """E[qhat^2] over reachable signals."""
    means, marg = posterior_means(gen, policy)
    reach = marg >= REACHABLE_TOL
    return float(marg[reach] @ means[reach] ** 2)


def joint_mean_q_qhat(gen: GenerationModel, policy: SignalPolicy) -> float:
    """E[q * qhat] under prior x policy."""
    means, _ = posterior_means(gen, policy)
    joint = gen.prior_array[:, None] * policy.matrix
    return float(gen.support_array @ joint @ means)
