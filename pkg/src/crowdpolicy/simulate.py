"""Trajectory sampling, most-likely routes, and Monte Carlo cost estimates.

All randomness flows from NumPy's Philox4x64 counter-based generator seeded
with the caller's integer seed, the same contract `generate_random_scenario`
uses, so identical seeds reproduce identical batches on any platform. Batches
are sampled with one uniform draw per trajectory per step via inverse CDF.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import Behavior, Label, RewardSchedule, log_pmf


@dataclass(frozen=True)
class Trajectory:
    """One sampled (or extremal) state sequence x_0..x_N with its log-probabilities.

    ``log_prob_policy`` is the full joint log-probability under the sampling
    behavior, initial factor included. ``log_prob_target`` is the same under
    the target when one was supplied (``-inf`` if the target cannot produce
    the sequence), else None.
    """

    states: tuple[Label, ...]
    log_prob_policy: float
    log_prob_target: float | None = None


def _guarded_cumulative(rows: np.ndarray) -> np.ndarray:
    """Row-wise CDF with the tail pinned to 1 at each row's last positive entry.

    Pinning keeps inverse-CDF lookups from ever landing on a zero-probability
    state when floating-point row sums fall a hair short of 1.
    """
    rows = np.atleast_2d(rows)
    cums = np.cumsum(rows, axis=1)
    last_positive = rows.shape[1] - 1 - np.argmax((rows > 0)[:, ::-1], axis=1)
    tail = np.arange(rows.shape[1]) >= last_positive[:, None]
    return np.where(tail, 1.0, cums)


def _sample_paths(policy: Behavior, count: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``count`` i.i.d. index paths of shape (count, N+1)."""
    d, n = policy.space.size, policy.horizon
    paths = np.empty((count, n + 1), dtype=np.int64)
    cum0 = _guarded_cumulative(policy.initial.probs)[0]
    paths[:, 0] = np.minimum(
        np.searchsorted(cum0, rng.random(count), side="right"), d - 1
    )
    for idx in range(n):
        cums = _guarded_cumulative(policy.kernels[idx].matrix)
        u = rng.random(count)
        picked = (u[:, None] >= cums[paths[:, idx]]).sum(axis=1)
        paths[:, idx + 1] = np.minimum(picked, d - 1)
    return paths


def _joint_log_prob(behavior: Behavior, path: Sequence[int]) -> float:
    logs = log_pmf(behavior.initial.probs)[path[0]]
    for idx in range(behavior.horizon):
        logs += log_pmf(behavior.kernels[idx].matrix)[path[idx], path[idx + 1]]
    return float(logs)


def sample_trajectories(
    policy: Behavior,
    count: int,
    seed: int,
    target: Behavior | None = None,
) -> list[Trajectory]:
    """Draw i.i.d. trajectories from a behavior.

    Args:
        policy: behavior to sample.
        count: number of trajectories, >= 1.
        seed: Philox seed; same seed, same batch.
        target: optional reference behavior; when given, each trajectory also
            carries its log-probability under it.

    Returns:
        Trajectories in draw order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if target is not None and (
        target.space != policy.space or target.horizon != policy.horizon
    ):
        raise ValueError("target must share the policy's state space and horizon")
    rng = np.random.Generator(np.random.Philox(seed))
    paths = _sample_paths(policy, count, rng)
    labels = policy.space.labels
    out = []
    for row in paths:
        states = tuple(labels[i] for i in row)
        lp = _joint_log_prob(policy, row)
        lt = _joint_log_prob(target, row) if target is not None else None
        out.append(Trajectory(states, lp, lt))
    return out


def most_likely_trajectory(policy: Behavior) -> Trajectory:
    """Highest-probability trajectory of a behavior.

    Max-product dynamic programming in log space: a backward pass computes
    the best achievable log-probability-to-go from every state, then a
    forward greedy walk picks, at each step, the smallest state index that
    attains the optimum. Among all maximum-probability trajectories this
    returns the lexicographically smallest in state-index order.
    """
    d, n = policy.space.size, policy.horizon
    log_kernels = [log_pmf(policy.kernels[idx].matrix) for idx in range(n)]
    to_go = np.zeros(d)
    best = [to_go]
    for idx in range(n - 1, -1, -1):
        to_go = (log_kernels[idx] + to_go[None, :]).max(axis=1)
        best.append(to_go)
    best.reverse()  # best[k][x]: optimal log-prob of steps k+1..N from state x

    path = np.empty(n + 1, dtype=np.int64)
    start_scores = log_pmf(policy.initial.probs) + best[0]
    path[0] = int(np.argmax(start_scores))
    for idx in range(n):
        step_scores = log_kernels[idx][path[idx]] + best[idx + 1]
        path[idx + 1] = int(np.argmax(step_scores))
    states = tuple(policy.space.labels[i] for i in path)
    return Trajectory(states, _joint_log_prob(policy, path))


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample-mean cost estimate with its standard error."""

    estimate: float
    stderr: float
    count: int


def monte_carlo_cost(
    policy: Behavior,
    target: Behavior,
    rewards: RewardSchedule,
    count: int,
    seed: int,
) -> MonteCarloEstimate:
    """Estimate the tracking cost by sampling trajectories from the policy.

    Each sampled trajectory contributes the sum over steps of the log ratio
    of policy to target transition probabilities minus the rewards collected;
    the initial factor is excluded, matching `evaluate_cost`. The estimate is
    the sample mean; the standard error uses the unbiased sample variance.

    Raises:
        ValueError: if a sampled trajectory has target probability zero (the
            cost integrand is undefined there); the offending trajectory is
            named.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if policy.space != target.space or rewards.space != target.space:
        raise ValueError("policy, target, and rewards must share one state space")
    if policy.horizon != target.horizon or rewards.horizon != target.horizon:
        raise ValueError("policy, target, and rewards must share one horizon")
    rng = np.random.Generator(np.random.Philox(seed))
    paths = _sample_paths(policy, count, rng)
    z = np.zeros(count)
    for idx in range(policy.horizon):
        prev, nxt = paths[:, idx], paths[:, idx + 1]
        p_step = policy.kernels[idx].matrix[prev, nxt]
        t_step = target.kernels[idx].matrix[prev, nxt]
        dead = np.flatnonzero(t_step == 0.0)
        if dead.size:
            labels = tuple(policy.space.labels[i] for i in paths[dead[0]])
            raise ValueError(
                f"sampled trajectory {labels} has target probability 0 at step "
                f"{idx + 1}; the cost is undefined for this policy/target pair"
            )
        z += np.log(p_step) - np.log(t_step) - rewards.values[idx][nxt]
    estimate = float(z.mean())
    stderr = float(z.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    return MonteCarloEstimate(estimate, stderr, count)


#: Column layout of `write_trajectories_csv`.
TRAJECTORY_CSV_COLUMNS = ("trajectory", "x_k...", "log_prob_policy", "log_prob_target")


def write_trajectories_csv(trajectories: Iterable[Trajectory], path: str | Path) -> None:
    """Write trajectories as CSV: index, one state column per step, log-probs.

    Columns: ``trajectory`` (0-based draw index), ``x_0`` .. ``x_N`` (state
    labels), ``log_prob_policy``, ``log_prob_target`` (blank when unknown).
    Floats use shortest round-trip formatting.
    """
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("nothing to write: empty trajectory list")
    n = len(trajectories[0].states) - 1
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["trajectory", *(f"x_{k}" for k in range(n + 1)),
             "log_prob_policy", "log_prob_target"]
        )
        for i, traj in enumerate(trajectories):
            if len(traj.states) != n + 1:
                raise ValueError("trajectories have inconsistent lengths")
            writer.writerow(
                [
                    i,
                    *(str(s) for s in traj.states),
                    repr(traj.log_prob_policy),
                    "" if traj.log_prob_target is None else repr(traj.log_prob_target),
                ]
            )


__all__ = [
    "Trajectory",
    "MonteCarloEstimate",
    "TRAJECTORY_CSV_COLUMNS",
    "sample_trajectories",
    "most_likely_trajectory",
    "monte_carlo_cost",
    "write_trajectories_csv",
]
