"""Command-line front end.

Subcommands: validate, synthesize, evaluate, oracle, simulate, demo.

Exit codes: 0 success, 2 scenario or policy validation failure, 3
infeasibility (no admissible contributor, or an estimand undefined for the
given inputs), 4 oracle guard refusal, 1 unexpected internal error.

All file outputs are written atomically (temp file in the same directory,
then rename). Given the same scenario and flags, report.json and every CSV
are byte-identical across runs; wall-clock timings therefore live in a
separate ``timing.json`` sidecar, and the ``--out`` directory itself is
never embedded in a report.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
import traceback
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InfeasibleError, OracleGuardError, ValidationError
from .evaluation import (
    CostBreakdown,
    evaluate_cost,
    pure_schedule_oracle,
    simplex_grid_oracle,
)
from .model import Behavior, RewardSchedule
from .scenario import (
    Scenario,
    demo_scenario_path,
    load_policy,
    load_scenario,
    save_policy,
)
from .simulate import (
    monte_carlo_cost,
    most_likely_trajectory,
    sample_trajectories,
    write_trajectories_csv,
)
from .synthesis import SynthesizedPolicy, bound_value, synthesize

PROG = "crowdpolicy"


# ---------------------------------------------------------------------------
# small output helpers
# ---------------------------------------------------------------------------


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _jsonable(obj: Any) -> Any:
    """Recursively convert to plain JSON types; infinities become strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump_json(doc: Any) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_json(path: Path, doc: Any) -> None:
    _atomic_write_text(path, _dump_json(doc))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _csv_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header: list, rows: list[list]) -> str:
    lines = [",".join(_csv_cell(c) for c in header)]
    lines.extend(",".join(_csv_cell(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def _kernel_csv(kernel_matrix: np.ndarray, labels: tuple) -> str:
    header = ["from", *labels]
    rows = [
        [labels[x], *[float(v) for v in kernel_matrix[x]]]
        for x in range(len(labels))
    ]
    return _csv_text(header, rows)


def _selection_csv(policy: SynthesizedPolicy) -> str:
    labels = policy.space.labels
    header = ["k", *labels]
    table = policy.selection_table()
    rows = [[k + 1, *table[k]] for k in range(policy.horizon)]
    return _csv_text(header, rows)


def _marginals_csv(behavior: Behavior) -> str:
    labels = behavior.space.labels
    header = ["k", *labels]
    mu = behavior.initial.probs
    rows = [[0, *[float(v) for v in mu]]]
    for idx in range(behavior.horizon):
        mu = mu @ behavior.kernels[idx].matrix
        rows.append([idx + 1, *[float(v) for v in mu]])
    return _csv_text(header, rows)


def _cost_dict(cost: CostBreakdown) -> dict:
    return {
        "total": cost.total,
        "kl_part": cost.kl_part,
        "reward_part": cost.reward_part,
        "per_step": [[kl, rew] for kl, rew in cost.per_step],
    }


def _pure_behavior(scenario: Scenario, contributor: int) -> Behavior:
    return Behavior(
        scenario.target.initial,
        scenario.contributors.kernels[contributor],
    )


def _pure_costs(scenario: Scenario, rewards: RewardSchedule) -> dict[str, float]:
    return {
        scenario.contributors.ids[i]: evaluate_cost(
            _pure_behavior(scenario, i), scenario.target, rewards
        ).total
        for i in range(scenario.contributors.size)
    }


def _resolve_profile(scenario: Scenario, name: str | None) -> tuple[str, RewardSchedule]:
    try:
        schedule = scenario.reward_profile(name)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if name is None:
        name = next(iter(scenario.rewards))
    return name, schedule


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _flags(args: argparse.Namespace) -> dict:
    """Flag set embedded in reports; --out is deliberately omitted."""
    keep = ("scenario", "reward_profile", "policy", "seed", "count", "mode",
            "grid_resolution", "tolerance_mode")
    return {key: getattr(args, key) for key in keep if hasattr(args, key)}


def _synthesis_outputs(
    out: Path, scenario: Scenario, policy: SynthesizedPolicy
) -> dict:
    labels = scenario.space.labels
    names = {}
    save_policy(policy.agent, out / "policy.json")
    names["policy"] = "policy.json"
    _atomic_write_text(out / "selection.csv", _selection_csv(policy))
    names["selection"] = "selection.csv"
    kernel_files = []
    for idx in range(policy.horizon):
        fname = f"agent_kernel_k{idx + 1}.csv"
        _atomic_write_text(
            out / fname, _kernel_csv(policy.agent.kernels[idx].matrix, labels)
        )
        kernel_files.append(fname)
    names["kernels"] = kernel_files
    _atomic_write_text(out / "marginals.csv", _marginals_csv(policy.agent))
    names["marginals"] = "marginals.csv"
    return names


def _filter_dict(policy: SynthesizedPolicy) -> dict:
    report = policy.filter_report
    if report is None:
        return {"retained": list(policy.contributor_ids), "excluded": []}
    return {
        "retained": list(report.retained_ids),
        "excluded": [
            {"id": e.contributor_id, "k": e.k, "state": e.state}
            for e in report.exclusions
        ],
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario, args.tolerance_mode)
    print(f"scenario OK: {scenario.name}")
    print(f"  states: {scenario.space.size}  horizon: {scenario.horizon}")
    print(f"  contributors: {', '.join(scenario.contributors.ids)}")
    print(f"  reward profiles: {', '.join(scenario.rewards)}")
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    scenario = load_scenario(args.scenario, args.tolerance_mode)
    profile, rewards = _resolve_profile(scenario, args.reward_profile)
    policy = synthesize(scenario.target, scenario.contributors, rewards)
    bound = bound_value(policy, scenario.target)
    exact = evaluate_cost(policy.agent, scenario.target, rewards)
    out = _out_dir(args)
    outputs = _synthesis_outputs(out, scenario, policy)
    report = {
        "command": "synthesize",
        "scenario_name": scenario.name,
        "scenario_sha256": _sha256(Path(args.scenario)),
        "flags": _flags(args),
        "reward_profile": profile,
        "filter": _filter_dict(policy),
        "selection": policy.selection_table(),
        "bound_value": bound,
        "exact_cost": _cost_dict(exact),
        "pure_contributor_costs": _pure_costs(scenario, rewards),
        "outputs": outputs,
    }
    _write_json(out / "report.json", report)
    _write_json(out / "timing.json", {"seconds": time.perf_counter() - started})
    print(f"synthesized {scenario.name} [{profile}]")
    print(f"  bound value: {bound!r}")
    print(f"  exact cost:  {exact.total!r}")
    print(f"  outputs in {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario, args.tolerance_mode)
    policy = load_policy(args.policy, scenario.space, args.tolerance_mode)
    if policy.horizon != scenario.horizon:
        raise ValidationError(
            f"policy horizon {policy.horizon} != scenario horizon {scenario.horizon}"
        )
    profile, rewards = _resolve_profile(scenario, args.reward_profile)
    cost = evaluate_cost(policy, scenario.target, rewards)
    doc = {
        "command": "evaluate",
        "scenario_name": scenario.name,
        "scenario_sha256": _sha256(Path(args.scenario)),
        "flags": _flags(args),
        "reward_profile": profile,
        "cost": _cost_dict(cost),
    }
    sys.stdout.write(_dump_json(doc))
    if args.out is not None:
        out = _out_dir(args)
        _write_json(out / "report.json", doc)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    scenario = load_scenario(args.scenario, args.tolerance_mode)
    profile, rewards = _resolve_profile(scenario, args.reward_profile)
    policy = synthesize(scenario.target, scenario.contributors, rewards)
    bound = bound_value(policy, scenario.target)
    mode = {"per-time": "per-time", "per-time-state": "per-time-and-state"}[args.mode]
    retained = scenario.contributors.subset(
        [scenario.contributors.ids.index(cid) for cid in policy.contributor_ids]
    )
    result = pure_schedule_oracle(scenario.target, retained, rewards, mode)
    schedule = (
        list(result.schedule)
        if isinstance(result.schedule, tuple)
        else result.schedule.tolist()
    )
    report = {
        "command": "oracle",
        "scenario_name": scenario.name,
        "scenario_sha256": _sha256(Path(args.scenario)),
        "flags": _flags(args),
        "reward_profile": profile,
        "bound_value": bound,
        "oracle": {
            "mode": args.mode,
            "cost": result.cost,
            "schedule": schedule,
            "contributor_ids": list(retained.ids),
        },
        "gap_oracle_minus_bound": result.cost - bound,
    }
    if args.grid_resolution is not None:
        grid = simplex_grid_oracle(
            scenario.target, retained, rewards, args.grid_resolution
        )
        report["grid"] = {
            "resolution": args.grid_resolution,
            "cost": grid.cost,
            "weights": grid.weights.tolist(),
        }
    sys.stdout.write(_dump_json(report))
    if args.out is not None:
        out = _out_dir(args)
        _write_json(out / "report.json", report)
        _write_json(out / "timing.json", {"seconds": time.perf_counter() - started})
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    scenario = load_scenario(args.scenario, args.tolerance_mode)
    policy = load_policy(args.policy, scenario.space, args.tolerance_mode)
    if policy.horizon != scenario.horizon:
        raise ValidationError(
            f"policy horizon {policy.horizon} != scenario horizon {scenario.horizon}"
        )
    profile, rewards = _resolve_profile(scenario, args.reward_profile)
    trajectories = sample_trajectories(
        policy, args.count, args.seed, target=scenario.target
    )
    try:
        estimate = monte_carlo_cost(
            policy, scenario.target, rewards, args.count, args.seed
        )
    except ValueError as exc:
        raise InfeasibleError(str(exc)) from None
    exact = evaluate_cost(policy, scenario.target, rewards)
    out = _out_dir(args)
    write_trajectories_csv(trajectories, out / "trajectories.csv")
    report = {
        "command": "simulate",
        "scenario_name": scenario.name,
        "scenario_sha256": _sha256(Path(args.scenario)),
        "flags": _flags(args),
        "reward_profile": profile,
        "monte_carlo": {
            "estimate": estimate.estimate,
            "stderr": estimate.stderr,
            "count": estimate.count,
            "seed": args.seed,
        },
        "exact_cost": _cost_dict(exact),
        "outputs": {"trajectories": "trajectories.csv"},
    }
    _write_json(out / "report.json", report)
    _write_json(out / "timing.json", {"seconds": time.perf_counter() - started})
    print(
        f"simulated {args.count} trajectories: estimate {estimate.estimate!r} "
        f"(stderr {estimate.stderr!r}), exact {exact.total!r}"
    )
    print(f"  outputs in {out}")
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    scenario_file = demo_scenario_path()
    scenario = load_scenario(scenario_file, args.tolerance_mode)
    out = _out_dir(args)
    profiles: dict[str, Any] = {}
    for profile in scenario.rewards:
        rewards = scenario.rewards[profile]
        policy = synthesize(scenario.target, scenario.contributors, rewards)
        bound = bound_value(policy, scenario.target)
        exact = evaluate_cost(policy.agent, scenario.target, rewards)
        route = most_likely_trajectory(policy.agent)
        sampled = sample_trajectories(
            policy.agent, 1, args.seed, target=scenario.target
        )[0]
        sub = out / profile
        sub.mkdir(parents=True, exist_ok=True)
        outputs = _synthesis_outputs(sub, scenario, policy)
        _write_json(
            sub / "route.json",
            {
                "profile": profile,
                "most_likely": list(route.states),
                "most_likely_log_prob": route.log_prob_policy,
                "sampled": list(sampled.states),
                "sample_seed": args.seed,
            },
        )
        outputs["route"] = "route.json"
        pure_costs = _pure_costs(scenario, rewards)
        profiles[profile] = {
            "bound_value": bound,
            "exact_cost": _cost_dict(exact),
            "pure_contributor_costs": pure_costs,
            "selection": policy.selection_table(),
            "most_likely_route": list(route.states),
            "sampled_route": list(sampled.states),
            "outputs": {
                key: ([f"{profile}/{v}" for v in val] if isinstance(val, list)
                      else f"{profile}/{val}")
                for key, val in outputs.items()
            },
        }
        print(f"[{profile}] most likely route: {' -> '.join(str(s) for s in route.states)}")
        print(f"[{profile}] agent cost {exact.total!r} vs contributors "
              + ", ".join(f"{cid}: {cost!r}" for cid, cost in pure_costs.items()))
    report = {
        "command": "demo",
        "scenario_name": scenario.name,
        "scenario_sha256": _sha256(scenario_file),
        "flags": _flags(args),
        "profiles": profiles,
    }
    _write_json(out / "report.json", report)
    _write_json(out / "timing.json", {"seconds": time.perf_counter() - started})
    print(f"demo outputs in {out}")
    return 0


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def _seed_type(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _count_type(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("count must be >= 1")
    return value


def _add_tolerance_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group()
    group.add_argument(
        "--strict", dest="tolerance_mode", action="store_const", const="strict",
        help="reject probability rows that do not sum to 1 (default)",
    )
    group.add_argument(
        "--renormalize", dest="tolerance_mode", action="store_const",
        const="renormalize", help="rescale probability rows by their sum",
    )
    sub.set_defaults(tolerance_mode="strict")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Synthesize an agent behavior from contributor kernels by "
        "divergence-guided switching.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and validate a scenario file")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    _add_tolerance_flags(p)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("synthesize", help="build the switched agent policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--reward-profile", dest="reward_profile", default=None)
    p.add_argument("--out", required=True, help="output directory")
    _add_tolerance_flags(p)
    p.set_defaults(handler=cmd_synthesize)

    p = sub.add_parser("evaluate", help="cost a policy file against a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", required=True, help="policy JSON file")
    p.add_argument("--reward-profile", dest="reward_profile", default=None)
    p.add_argument("--out", default=None)
    _add_tolerance_flags(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("oracle", help="compare the synthesized bound to schedule search")
    p.add_argument("--scenario", required=True)
    p.add_argument("--reward-profile", dest="reward_profile", default=None)
    p.add_argument(
        "--mode", choices=("per-time", "per-time-state"), default="per-time-state"
    )
    p.add_argument(
        "--grid-resolution", dest="grid_resolution", type=_count_type, default=None,
        help="also run the mixture-weight grid oracle at this resolution",
    )
    p.add_argument("--out", default=None)
    _add_tolerance_flags(p)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("simulate", help="sample trajectories and estimate the cost")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--reward-profile", dest="reward_profile", default=None)
    p.add_argument("--count", type=_count_type, required=True)
    p.add_argument("--seed", type=_seed_type, required=True)
    p.add_argument("--out", required=True)
    _add_tolerance_flags(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("demo", help="run the bundled six-node road-network demo")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=_seed_type, default=0)
    _add_tolerance_flags(p)
    p.set_defaults(handler=cmd_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except OracleGuardError as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return 4
    except Exception:
        traceback.print_exc()
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
