"""Command-line front end.

Exit codes: 0 success, 2 configuration or validation error, 3 policy/scenario
dimension mismatch, 4 failed verification certificate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, DimensionError, Scenario, load_scenario, scenario_to_dict
from .population import MEAN_RATIO, SYSTEM, multi_regime, nash_equilibrium, robustness_check
from .signalling import (
    SignalPolicy,
    constant_policy,
    load_policy,
    no_info_policy,
    posterior_mean_square,
    posterior_means,
    random_policy,
    truth_policy,
)
from .tso import Regime, classify_regime
from .verify import identity_suite, monte_carlo_cost, policy_cost, policy_search

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIMENSION = 3
EXIT_CERTIFICATE = 4

SWEEP_COLUMNS = ("b", "lambda_or_h", "regime", "cost_truth", "cost_noinfo", "cost_gap")


class CertificateFailure(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def _rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Regime):
        return obj.value
    return obj


def _to_json(doc) -> str:
    return json.dumps(_json_ready(doc), indent=2) + "\n"


def _key_value_csv(doc: dict) -> str:
    return _rows_to_csv(("quantity", "value"), list(doc.items()))


def parse_policy_spec(spec: str, m: int) -> SignalPolicy:
    """``truth``, ``noinfo``, ``constant:<j>`` or a path to a policy JSON file."""
    if spec == "truth":
        return truth_policy(m)
    if spec == "noinfo":
        return no_info_policy(m)
    if spec.startswith("constant:"):
        try:
            j = int(spec.split(":", 1)[1])
            return constant_policy(m, j)
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad constant policy spec {spec!r}: {exc}") from exc
    try:
        return load_policy(spec)
    except OSError as exc:
        raise ConfigError(f"cannot read policy file {spec!r}: {exc}") from exc


def _load(path: str) -> Scenario:
    try:
        return load_scenario(path)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path!r}: {exc}") from exc


def regime_and_indicator(scenario: Scenario) -> tuple[Regime, float]:
    """Regime label with the quantity that decides it.

    Single consumer: the bracket multiplying ``E[qhat^2]``. Several
    consumers: the truth-condition function ``h(b)``.
    """
    if scenario.n == 1:
        rep = classify_regime(scenario.market, scenario.consumer)
        return rep.regime, rep.lambda_big
    return multi_regime(scenario)


def evaluate_report(scenario: Scenario, policy: SignalPolicy) -> dict:
    gen = scenario.generation
    policy.check_dimension(gen)
    means, marg = posterior_means(gen, policy)
    regime, indicator = regime_and_indicator(scenario)
    doc = {
        "cost": policy_cost(scenario, policy),
        "posterior_mean_square": posterior_mean_square(gen, policy),
        "regime": regime.value,
        "lambda_or_h": indicator,
        "signals": [],
    }
    for j in range(gen.m):
        eq = nash_equilibrium(scenario, means[j])
        doc["signals"].append(
            {
                "signal": j,
                "signal_value": gen.support[j],
                "marginal": marg[j],
                "posterior_mean": means[j],
                "average_action": eq.average,
                "actions": eq.actions.tolist(),
            }
        )
    return doc


def _flatten_evaluate(doc: dict) -> dict:
    flat = {k: v for k, v in doc.items() if k != "signals"}
    for s in doc["signals"]:
        j = s["signal"]
        for key in ("signal_value", "marginal", "posterior_mean", "average_action"):
            flat[f"{key}[{j}]"] = s[key]
        for i, a in enumerate(s["actions"]):
            flat[f"action[{j}][{i}]"] = a
    return flat


def cmd_evaluate(args) -> int:
    scenario = _load(args.scenario)
    policy = parse_policy_spec(args.policy, scenario.generation.m)
    doc = evaluate_report(scenario, policy)
    fmt_ = args.format or "csv"
    _emit(_to_json(doc) if fmt_ == "json" else _key_value_csv(_flatten_evaluate(doc)), args.out)
    return EXIT_OK


@dataclass(frozen=True)
class SweepRow:
    b: float
    lambda_or_h: float
    regime: Regime
    cost_truth: float
    cost_noinfo: float
    cost_gap: float

    def astuple(self):
        return (self.b, self.lambda_or_h, self.regime.value, self.cost_truth, self.cost_noinfo, self.cost_gap)


def sweep_rows(scenario: Scenario, b_from: float, b_to: float, steps: int) -> list[SweepRow]:
    if not (0 < b_from < b_to) or steps < 2:
        raise ConfigError("sweep needs 0 < b-from < b-to and steps >= 2")
    m = scenario.generation.m
    truth, noinfo = truth_policy(m), no_info_policy(m)
    rows = []
    for b in np.linspace(b_from, b_to, steps):
        sc = scenario.with_b(float(b))
        regime, indicator = regime_and_indicator(sc)
        ct, cn = policy_cost(sc, truth), policy_cost(sc, noinfo)
        rows.append(SweepRow(float(b), indicator, regime, ct, cn, ct - cn))
    return rows


def cmd_sweep(args) -> int:
    scenario = _load(args.scenario)
    rows = sweep_rows(scenario, args.b_from, args.b_to, args.steps)
    if (args.format or "csv") == "json":
        text = _to_json([dict(zip(SWEEP_COLUMNS, r.astuple())) for r in rows])
    else:
        text = _rows_to_csv(SWEEP_COLUMNS, [r.astuple() for r in rows])
    _emit(text, args.out)
    return EXIT_OK


def threshold_report(scenario: Scenario) -> dict:
    system = robustness_check(scenario, SYSTEM)
    mean_ratio = robustness_check(scenario, MEAN_RATIO)
    return {
        "representative": system.representative,
        "population": system.population,
        "robust": system.holds,
        "population_mean_ratio": mean_ratio.population,
        "robust_mean_ratio": mean_ratio.holds,
    }


def cmd_threshold(args) -> int:
    doc = threshold_report(_load(args.scenario))
    if (args.format or "csv") == "json":
        text = _to_json(doc)
    else:
        text = _rows_to_csv(tuple(doc), [tuple(doc.values())])
    _emit(text, args.out)
    return EXIT_OK


def verification_report(scenario: Scenario, samples: int, seed: int, draws: int) -> dict:
    search = policy_search(scenario, samples, seed)
    m = scenario.generation.m
    policies = [truth_policy(m), no_info_policy(m)]
    policies += [random_policy(m, seed + 1 + i, 1.0) for i in range(min(samples, 200))]
    identities = identity_suite(scenario, policies)
    mc = {}
    for name, pol in (("truth", truth_policy(m)), ("noinfo", no_info_policy(m))):
        est = monte_carlo_cost(scenario, pol, draws, seed)
        exact = policy_cost(scenario, pol)
        err = abs(est.estimate - exact)
        mc[name] = {
            "estimate": est.estimate,
            "stderr": est.stderr,
            "exact": exact,
            "passed": bool(err <= 3 * est.stderr + 1e-12),
        }
    failures = [f"policy_search gap {search.gap:.3g}"] if not search.passed else []
    failures += [f"{k} residual {v.max_residual:.3g}" for k, v in identities.items() if not v.passed]
    failures += [f"monte_carlo[{k}] off by {abs(v['estimate'] - v['exact']):.3g}" for k, v in mc.items() if not v["passed"]]
    return {
        "scenario": scenario_to_dict(scenario),
        "seed": seed,
        "samples": samples,
        "best_cost": search.best_cost,
        "closed_form_cost": search.closed_form_cost,
        "gap": search.gap,
        "identities": {k: v.max_residual for k, v in identities.items()},
        "monte_carlo": mc,
        "passed": not failures,
        "failures": failures,
    }


def cmd_verify(args) -> int:
    scenario = _load(args.scenario)
    if args.samples < 1 or args.draws < 2:
        raise ConfigError("--samples must be >= 1 and --draws >= 2")
    doc = verification_report(scenario, args.samples, args.seed, args.draws)
    if (args.format or "json") == "json":
        text = _to_json(doc)
    else:
        flat = {k: v for k, v in doc.items() if k not in ("scenario", "identities", "monte_carlo", "failures")}
        flat.update({f"identity[{k}]": v for k, v in doc["identities"].items()})
        text = _key_value_csv(flat)
    _emit(text, args.out)
    if not doc["passed"]:
        raise CertificateFailure("; ".join(doc["failures"]))
    return EXIT_OK


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--scenario", required=True, help="scenario JSON file")
    shared.add_argument("--format", choices=("csv", "json"), default=None)
    shared.add_argument("--seed", type=_seed, default=0)
    shared.add_argument("--out", default=None, help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="dr-persuasion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", parents=[shared], help="cost and responses under one policy")
    ev.add_argument("--policy", default="truth", help="truth | noinfo | constant:<j> | policy file")
    ev.set_defaults(func=cmd_evaluate)

    sw = sub.add_parser("sweep", parents=[shared], help="regime and costs over a grid of b")
    sw.add_argument("--b-from", type=float, required=True)
    sw.add_argument("--b-to", type=float, required=True)
    sw.add_argument("--steps", type=int, required=True)
    sw.set_defaults(func=cmd_sweep)

    th = sub.add_parser("threshold", parents=[shared], help="representative and population thresholds")
    th.set_defaults(func=cmd_threshold)

    ve = sub.add_parser("verify", parents=[shared], help="brute-force certificates")
    ve.add_argument("--samples", type=int, default=1000)
    ve.add_argument("--draws", type=int, default=100_000, help="Monte Carlo draws per policy")
    ve.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificateFailure as exc:
        print(f"certificate failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE


if __name__ == "__main__":
    sys.exit(main())
