"""Scenario files: one JSON document describing a complete problem instance.

A scenario bundles the state labels, horizon, target behavior, contributor
kernels, and one or more named reward profiles. The on-disk layout is
documented in ``docs/scenario.schema.json``; the essentials:

* ``"scenario_version": 1`` is mandatory;
* kernels are ``[k][from][to]`` row-major, and a single ``[from][to]`` matrix
  is time-homogeneous shorthand for the same kernel at every step;
* floats are written with shortest round-trip precision, so save followed by
  load reproduces every value exactly.

`generate_random_scenario` draws reproducible instances from a Philox4x64
counter-based generator; the draw order is part of the determinism contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ValidationError
from .model import Behavior, Label, RewardSchedule, StatePMF, StateSpace, TransitionKernel
from .synthesis import ContributorSet

SCENARIO_VERSION = 1

_TOP_LEVEL_KEYS = {
    "scenario_version",
    "name",
    "states",
    "horizon",
    "target",
    "contributors",
    "rewards",
    "metadata",
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A named problem instance: target, contributors, and reward profiles."""

    name: str
    space: StateSpace
    target: Behavior
    contributors: ContributorSet
    rewards: dict[str, RewardSchedule]
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("scenario name must be non-empty")
        if self.target.space != self.space:
            raise ValueError("target state space does not match scenario states")
        if self.contributors.space != self.space:
            raise ValueError("contributor state space does not match scenario states")
        if self.contributors.horizon != self.horizon:
            raise ValueError("contributor horizon does not match target horizon")
        if not self.rewards:
            raise ValueError("scenario must define at least one reward profile")
        for profile, schedule in self.rewards.items():
            if schedule.space != self.space or schedule.horizon != self.horizon:
                raise ValueError(
                    f"reward profile {profile!r} does not match scenario dimensions"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.name == other.name
            and self.space == other.space
            and self.target == other.target
            and self.contributors == other.contributors
            and self.rewards == other.rewards
            and self.metadata == other.metadata
        )

    @property
    def horizon(self) -> int:
        return self.target.horizon

    def reward_profile(self, name: str | None = None) -> RewardSchedule:
        """Profile by name, or the sole profile when the scenario has only one."""
        if name is None:
            if len(self.rewards) == 1:
                return next(iter(self.rewards.values()))
            raise ValueError(
                "scenario has several reward profiles, name one of: "
                + ", ".join(sorted(self.rewards))
            )
        try:
            return self.rewards[name]
        except KeyError:
            raise ValueError(
                f"unknown reward profile {name!r}, scenario has: "
                + ", ".join(sorted(self.rewards))
            ) from None


def demo_scenario_path() -> Path:
    """Location of the bundled six-node road-network demonstration scenario."""
    return Path(__file__).parent / "data" / "demo_scenario.json"


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def load_scenario(path: str | Path, mode: str = "strict") -> Scenario:
    """Parse and validate a scenario file.

    Args:
        path: JSON file to read.
        mode: row tolerance mode, "strict" (default) or "renormalize".

    Raises:
        ValidationError: on unreadable files, malformed JSON (reported with
            line and column), or any schema or probability violation
            (reported with kernel row coordinates).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(doc, mode=mode, source=str(path))


def scenario_from_dict(
    doc: Any, mode: str = "strict", source: str = "scenario"
) -> Scenario:
    """Build a Scenario from an already-parsed JSON document."""

    def fail(message: str) -> ValidationError:
        return ValidationError(f"{source}: {message}")

    if not isinstance(doc, dict):
        raise fail("top level must be a JSON object")
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise fail(f"unknown top-level keys: {sorted(unknown)}")
    version = doc.get("scenario_version")
    if version != SCENARIO_VERSION:
        raise fail(
            f"scenario_version must be {SCENARIO_VERSION}, got {version!r}"
        )
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise fail("name must be a non-empty string")

    states = doc.get("states")
    if not isinstance(states, list) or not states:
        raise fail("states must be a non-empty list of labels")
    for lab in states:
        if not isinstance(lab, (int, str)) or isinstance(lab, bool):
            raise fail(f"state label {lab!r} must be an integer or a string")
    try:
        space = StateSpace(tuple(states))
    except ValueError as exc:
        raise fail(str(exc)) from None

    horizon = doc.get("horizon")
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        raise fail("horizon must be an integer >= 1")

    target_node = doc.get("target")
    if not isinstance(target_node, dict) or set(target_node) != {"initial", "kernels"}:
        raise fail("target must be an object with keys 'initial' and 'kernels'")
    try:
        initial = StatePMF(space, np.asarray(target_node["initial"], dtype=float), mode)
    except (ValueError, TypeError) as exc:
        raise fail(f"target initial pmf: {exc}") from None
    target_kernels = _parse_kernels(
        target_node["kernels"], space, horizon, mode, "target", fail
    )
    target = Behavior(initial, target_kernels)

    contributors_node = doc.get("contributors")
    if not isinstance(contributors_node, list) or not contributors_node:
        raise fail("contributors must be a non-empty list")
    ids: list[str] = []
    all_kernels: list[tuple[TransitionKernel, ...]] = []
    for pos, entry in enumerate(contributors_node):
        if not isinstance(entry, dict) or set(entry) != {"id", "kernels"}:
            raise fail(
                f"contributor #{pos + 1} must be an object with keys 'id' and 'kernels'"
            )
        cid = entry["id"]
        if not isinstance(cid, str) or not cid:
            raise fail(f"contributor #{pos + 1}: id must be a non-empty string")
        ids.append(cid)
        all_kernels.append(
            _parse_kernels(entry["kernels"], space, horizon, mode, f"contributor {cid!r}", fail)
        )
    try:
        contributors = ContributorSet(space, tuple(all_kernels), tuple(ids))
    except ValueError as exc:
        raise fail(str(exc)) from None

    rewards_node = doc.get("rewards")
    if not isinstance(rewards_node, dict) or not rewards_node:
        raise fail("rewards must be an object with at least one named profile")
    rewards: dict[str, RewardSchedule] = {}
    for profile, values in rewards_node.items():
        if not profile:
            raise fail("reward profile names must be non-empty")
        arr = _numeric_array(values, f"reward profile {profile!r}", fail)
        if arr.ndim != 2 or arr.shape != (horizon, space.size):
            raise fail(
                f"reward profile {profile!r} must be a {horizon}x{space.size} array, "
                f"got shape {arr.shape}"
            )
        try:
            rewards[profile] = RewardSchedule(space, arr)
        except ValueError as exc:
            raise fail(f"reward profile {profile!r}: {exc}") from None

    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise fail("metadata must be an object")

    try:
        return Scenario(name, space, target, contributors, rewards, metadata)
    except ValueError as exc:
        raise fail(str(exc)) from None


def _numeric_array(node: Any, what: str, fail) -> np.ndarray:
    try:
        arr = np.asarray(node, dtype=float)
    except (ValueError, TypeError):
        raise fail(f"{what} must be a numeric array") from None
    return arr


def _parse_kernels(
    node: Any, space: StateSpace, horizon: int, mode: str, owner: str, fail
) -> tuple[TransitionKernel, ...]:
    arr = _numeric_array(node, f"{owner} kernels", fail)
    if arr.ndim == 2:
        # time-homogeneous shorthand: one matrix replicated across the horizon
        per_k = [arr] * horizon
    elif arr.ndim == 3:
        if arr.shape[0] != horizon:
            raise fail(
                f"{owner} kernels: expected {horizon} matrices, got {arr.shape[0]}"
            )
        per_k = list(arr)
    else:
        raise fail(
            f"{owner} kernels must be a [from][to] matrix or a [k][from][to] array"
        )
    kernels = []
    for k, matrix in enumerate(per_k, start=1):
        try:
            kernels.append(TransitionKernel(space, matrix, mode))
        except ValueError as exc:
            raise fail(f"{owner} kernel at k={k}: {exc}") from None
    return tuple(kernels)


# ---------------------------------------------------------------------------
# saving
# ---------------------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    """Canonical JSON document for a scenario (kernels always written per step)."""
    return {
        "scenario_version": SCENARIO_VERSION,
        "name": scenario.name,
        "states": list(scenario.space.labels),
        "horizon": scenario.horizon,
        "target": {
            "initial": scenario.target.initial.probs.tolist(),
            "kernels": [k.matrix.tolist() for k in scenario.target.kernels],
        },
        "contributors": [
            {
                "id": scenario.contributors.ids[i],
                "kernels": [k.matrix.tolist() for k in scenario.contributors.kernels[i]],
            }
            for i in range(scenario.contributors.size)
        ],
        "rewards": {
            profile: schedule.values.tolist()
            for profile, schedule in scenario.rewards.items()
        },
        "metadata": scenario.metadata,
    }


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write a scenario as JSON; values survive a save/load round trip exactly.

    Python's float repr is shortest-round-trip, so every probability and
    reward is reproduced bit for bit by `load_scenario`. I/O failures
    propagate as OSError.
    """
    path = Path(path)
    text = json.dumps(scenario_to_dict(scenario), indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# policy files
# ---------------------------------------------------------------------------

POLICY_VERSION = 1


def save_policy(policy: Behavior, path: str | Path) -> None:
    """Write a behavior (e.g. a synthesized agent) as a JSON policy file."""
    doc = {
        "policy_version": POLICY_VERSION,
        "states": list(policy.space.labels),
        "initial": policy.initial.probs.tolist(),
        "kernels": [k.matrix.tolist() for k in policy.kernels],
    }
    Path(path).write_text(
        json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8"
    )


def load_policy(
    path: str | Path, space: StateSpace | None = None, mode: str = "strict"
) -> Behavior:
    """Read a policy file back into a behavior.

    Args:
        path: JSON file written by `save_policy`.
        space: when given, the file's states must match it exactly.
        mode: row tolerance mode for validation.

    Raises:
        ValidationError: on parse or validation failure.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read policy file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc

    def fail(message: str) -> ValidationError:
        return ValidationError(f"{path}: {message}")

    if not isinstance(doc, dict):
        raise fail("top level must be a JSON object")
    expected = {"policy_version", "states", "initial", "kernels"}
    if set(doc) != expected:
        raise fail(f"policy file must have exactly the keys {sorted(expected)}")
    if doc["policy_version"] != POLICY_VERSION:
        raise fail(
            f"policy_version must be {POLICY_VERSION}, got {doc['policy_version']!r}"
        )
    states = doc["states"]
    if not isinstance(states, list) or not states:
        raise fail("states must be a non-empty list of labels")
    try:
        file_space = StateSpace(tuple(states))
    except ValueError as exc:
        raise fail(str(exc)) from None
    if space is not None and file_space != space:
        raise fail("policy states do not match the scenario's states")
    try:
        initial = StatePMF(file_space, np.asarray(doc["initial"], dtype=float), mode)
    except (ValueError, TypeError) as exc:
        raise fail(f"initial pmf: {exc}") from None
    arr = _numeric_array(doc["kernels"], "policy kernels", fail)
    if arr.ndim != 3:
        raise fail("policy kernels must be a [k][from][to] array")
    kernels = []
    for k, matrix in enumerate(arr, start=1):
        try:
            kernels.append(TransitionKernel(file_space, matrix, mode))
        except ValueError as exc:
            raise fail(f"policy kernel at k={k}: {exc}") from None
    return Behavior(initial, tuple(kernels))


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def generate_random_scenario(
    seed: int,
    d: int,
    horizon: int,
    contributors: int,
    sparsity: float = 0.0,
    reward_range: tuple[float, float] = (-1.0, 1.0),
    name: str | None = None,
) -> Scenario:
    """Draw a reproducible random scenario.

    Target rows (and the initial pmf) are strictly positive, so any
    contributor row has finite KL divergence to its target row and the
    admissibility filter retains everything. Contributor rows are Dirichlet
    draws, optionally sparsified entrywise with probability ``sparsity`` (at
    least one entry always survives) and renormalized.

    Randomness comes from NumPy's Philox4x64 counter-based generator seeded
    with ``seed``; the sequence of draws (initial pmf, target kernels in step
    then row order, contributor kernels in contributor/step/row order, reward
    profile last) is fixed, so identical arguments give identical scenarios
    on any platform.
    """
    if d < 1 or horizon < 1 or contributors < 1:
        raise ValueError("d, horizon, and contributors must all be >= 1")
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0, 1)")
    lo, hi = float(reward_range[0]), float(reward_range[1])
    if not lo <= hi:
        raise ValueError("reward_range must satisfy lo <= hi")
    rng = np.random.Generator(np.random.Philox(seed))

    def positive_pmf() -> np.ndarray:
        v = rng.dirichlet(np.ones(d)) + 1e-6  # floor keeps every entry positive
        return v / v.sum()

    space = StateSpace(tuple(range(d)))
    initial = StatePMF(space, positive_pmf())
    target_kernels = tuple(
        TransitionKernel(space, np.stack([positive_pmf() for _ in range(d)]))
        for _ in range(horizon)
    )
    target = Behavior(initial, target_kernels)

    pools: list[tuple[TransitionKernel, ...]] = []
    for _ in range(contributors):
        per_k = []
        for _ in range(horizon):
            rows = np.empty((d, d))
            for x in range(d):
                row = positive_pmf()
                if sparsity > 0.0:
                    drop = rng.random(d) < sparsity
                    if drop.all():
                        drop[int(np.argmax(row))] = False
                    row = np.where(drop, 0.0, row)
                    row = row / row.sum()
                rows[x] = row
            per_k.append(TransitionKernel(space, rows))
        pools.append(tuple(per_k))
    ids = tuple(f"c{i + 1}" for i in range(contributors))
    pool = ContributorSet(space, tuple(pools), ids)

    rewards = RewardSchedule(space, rng.uniform(lo, hi, size=(horizon, d)))
    metadata = {
        "generator": {
            "algorithm": "philox4x64",
            "seed": int(seed),
            "d": d,
            "horizon": horizon,
            "contributors": contributors,
            "sparsity": sparsity,
            "reward_range": [lo, hi],
        }
    }
    return Scenario(
        name or f"random-{seed}",
        space,
        target,
        pool,
        {"default": rewards},
        metadata,
    )


__all__ = [
    "SCENARIO_VERSION",
    "POLICY_VERSION",
    "Scenario",
    "demo_scenario_path",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "save_scenario",
    "save_policy",
    "load_policy",
    "generate_random_scenario",
]
