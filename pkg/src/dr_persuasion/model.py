"""Scenario types, validation and JSON (de)serialization.

A scenario bundles the renewable-generation prior, the market cost and
pricing parameters, and one or more consumers. Constructors never validate:
an invalid scenario can be built and inspected with :func:`validate`, while
:func:`load_scenario` refuses anything that does not validate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

PROB_TOL = 1e-12


class ConfigError(Exception):
    """Base class for malformed or invalid configuration input."""


class ParseError(ConfigError):
    """The configuration document is structurally wrong."""


class ValidationError(ConfigError):
    """The configuration parsed but violates a model invariant."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DimensionError(ValueError):
    """A signal policy does not match the scenario's support size."""


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


@dataclass(frozen=True)
class GenerationModel:
    """Finite-support prior over renewable generation levels."""

    support: tuple[float, ...]
    prior: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(float(x) for x in self.support))
        object.__setattr__(self, "prior", tuple(float(x) for x in self.prior))

    @property
    def m(self) -> int:
        return len(self.support)

    @property
    def support_array(self) -> np.ndarray:
        return np.asarray(self.support, dtype=float)

    @property
    def prior_array(self) -> np.ndarray:
        return np.asarray(self.prior, dtype=float)

    @property
    def mean(self) -> float:
        return float(self.prior_array @ self.support_array)

    @property
    def second_moment(self) -> float:
        return float(self.prior_array @ self.support_array**2)


@dataclass(frozen=True)
class ConsumerParams:
    u: float  # marginal utility of consumption
    c: float  # effort-cost curvature
    y0: float  # baseline consumption


@dataclass(frozen=True)
class MarketParams:
    k: float  # cost and price intercept
    beta: float  # marginal-cost slope
    b: float  # slope of the retail pricing contract


@dataclass(frozen=True)
class Scenario:
    generation: GenerationModel
    market: MarketParams
    consumers: tuple[ConsumerParams, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "consumers", tuple(self.consumers))

    @property
    def n(self) -> int:
        return len(self.consumers)

    @property
    def y0_bar(self) -> float:
        return float(np.mean([c.y0 for c in self.consumers]))

    @property
    def c_bar(self) -> float:
        return float(np.mean([c.c for c in self.consumers]))

    @property
    def costs(self) -> np.ndarray:
        return np.array([c.c for c in self.consumers], dtype=float)

    @property
    def consumer(self) -> ConsumerParams:
        """The single consumer of an n=1 scenario."""
        if self.n != 1:
            raise ValueError(f"expected a single-consumer scenario, got n={self.n}")
        return self.consumers[0]

    def with_b(self, b: float) -> "Scenario":
        return replace(self, market=replace(self.market, b=float(b)))


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate(scenario: Scenario) -> list[Violation]:
    """Collect every violated invariant of ``scenario``.

    Returns:
        A list of violations, empty iff the scenario is valid.
    """
    out: list[Violation] = []
    gen = scenario.generation
    if gen.m < 1:
        out.append(Violation("support", "support must contain at least one level"))
    if len(gen.prior) != gen.m:
        out.append(
            Violation("prior", f"prior has {len(gen.prior)} entries but support has {gen.m}")
        )
    if not all(_finite(q) for q in gen.support):
        out.append(Violation("support", "support values must be finite"))
    elif any(b <= a for a, b in zip(gen.support, gen.support[1:])):
        out.append(Violation("support", "support must be strictly increasing"))
    if not all(_finite(p) for p in gen.prior):
        out.append(Violation("prior", "prior probabilities must be finite"))
    else:
        for i, p in enumerate(gen.prior):
            if p < 0:
                out.append(Violation("prior", f"probability {i} is negative ({p:.12g})"))
        total = math.fsum(gen.prior)
        if gen.prior and abs(total - 1.0) > PROB_TOL:
            out.append(Violation("prior", f"prior sums to {total:.12g}"))

    mk = scenario.market
    for name in ("k", "beta", "b"):
        v = getattr(mk, name)
        if not _finite(v) or v <= 0:
            out.append(Violation(name, f"{name} must be positive and finite (got {v})"))

    if scenario.n < 1:
        out.append(Violation("consumers", "at least one consumer is required"))
    for i, con in enumerate(scenario.consumers):
        where = f"consumers[{i}]"
        if not _finite(con.c) or con.c <= 0:
            out.append(Violation(f"{where}.c", "effort-cost curvature must be positive"))
        if not _finite(con.u) or con.u < 0:
            out.append(Violation(f"{where}.u", "marginal utility must be finite and nonnegative"))
        if not _finite(con.y0):
            out.append(Violation(f"{where}.y0", "baseline consumption must be finite"))
    return out


_TOP_KEYS = ("support", "prior", "k", "beta", "b", "consumers")
_CONSUMER_KEYS = ("u", "c", "y0")


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _number_list(value: Any, where: str) -> list[float]:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected an array of numbers")
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _check_keys(obj: Any, expected: Sequence[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected a JSON object")
    unknown = sorted(set(obj) - set(expected))
    if unknown:
        raise ParseError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")
    for key in expected:
        if key not in obj:
            raise ParseError(f"{where}: missing required key {key!r}")


def scenario_from_dict(doc: Any) -> Scenario:
    """Build a scenario from a parsed config document (strict keys, no validation)."""
    _check_keys(doc, _TOP_KEYS, "scenario")
    if not isinstance(doc["consumers"], list):
        raise ParseError("consumers: expected an array of objects")
    consumers = []
    for i, obj in enumerate(doc["consumers"]):
        where = f"consumers[{i}]"
        _check_keys(obj, _CONSUMER_KEYS, where)
        consumers.append(
            ConsumerParams(
                u=_number(obj["u"], f"{where}.u"),
                c=_number(obj["c"], f"{where}.c"),
                y0=_number(obj["y0"], f"{where}.y0"),
            )
        )
    return Scenario(
        generation=GenerationModel(
            support=_number_list(doc["support"], "support"),
            prior=_number_list(doc["prior"], "prior"),
        ),
        market=MarketParams(
            k=_number(doc["k"], "k"),
            beta=_number(doc["beta"], "beta"),
            b=_number(doc["b"], "b"),
        ),
        consumers=consumers,
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "support": list(scenario.generation.support),
        "prior": list(scenario.generation.prior),
        "k": scenario.market.k,
        "beta": scenario.market.beta,
        "b": scenario.market.b,
        "consumers": [{"u": c.u, "c": c.c, "y0": c.y0} for c in scenario.consumers],
    }


def _reject_constant(name: str):
    raise ParseError(f"non-finite literal {name} is not allowed")


def parse_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    scenario = scenario_from_dict(doc)
    violations = validate(scenario)
    if violations:
        raise ValidationError(violations)
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario config file.

    Raises:
        ParseError: malformed JSON, missing or unknown keys, non-numeric values.
        ValidationError: the parsed scenario violates an invariant.
    """
    return parse_scenario(Path(path).read_text())


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    # repr-exact floats make load(save(s)) == s
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")
