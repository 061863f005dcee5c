"""Tests for exact cost evaluation and the independent oracles."""

import itertools
import math

import numpy as np
import pytest

from crowdpolicy.errors import OracleGuardError
from crowdpolicy.evaluation import (
    ORACLE_LIMIT,
    evaluate_cost,
    logsum_bound_check,
    pure_schedule_oracle,
    simplex_grid_oracle,
    trajectory_enumeration_cost,
)
from crowdpolicy.model import (
    Behavior,
    RewardSchedule,
    StatePMF,
    StateSpace,
    TransitionKernel,
    WeightVector,
)
from crowdpolicy.scenario import generate_random_scenario
from crowdpolicy.synthesis import bound_value, synthesize

LN2 = math.log(2.0)


def chain(space, *rows_per_step, initial=None):
    d = space.size
    init = StatePMF(space, np.asarray(initial if initial is not None else [1.0] + [0.0] * (d - 1)))
    kernels = tuple(TransitionKernel(space, np.asarray(r, dtype=float)) for r in rows_per_step)
    return Behavior(init, kernels)


def pure_behavior(scenario, contributor):
    return Behavior(scenario.target.initial, scenario.contributors.kernels[contributor])


# ---------------------------------------------------------------------------
# evaluate_cost
# ---------------------------------------------------------------------------


def test_point_mass_chain_costs():
    space = StateSpace(("a", "b", "c"))
    step = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]
    policy = chain(space, step, step)
    rewards = RewardSchedule(space, np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]))
    cost = evaluate_cost(policy, policy, rewards)
    assert cost.kl_part == 0.0
    assert cost.reward_part == pytest.approx(3.0)
    assert cost.total == pytest.approx(-3.0)
    assert cost.per_step == ((0.0, 1.0), (0.0, 2.0))


def test_breakdown_identity_total_is_kl_minus_reward():
    for seed in range(20):
        scenario = generate_random_scenario(
            seed=seed, d=3, horizon=3, contributors=2, reward_range=(-1.0, 3.0)
        )
        rewards = scenario.reward_profile()
        cost = evaluate_cost(pure_behavior(scenario, 0), scenario.target, rewards)
        assert cost.total == pytest.approx(cost.kl_part - cost.reward_part, abs=1e-12)
        assert cost.kl_part == pytest.approx(sum(kl for kl, _ in cost.per_step), abs=1e-12)
        assert cost.reward_part == pytest.approx(sum(r for _, r in cost.per_step), abs=1e-12)


def test_exact_cost_matches_trajectory_enumeration():
    for seed in range(60):
        scenario = generate_random_scenario(
            seed=100 + seed,
            d=2 + seed % 2,
            horizon=1 + seed % 4,
            contributors=1 + seed % 3,
            sparsity=0.35 if seed % 3 == 0 else 0.0,
            reward_range=(-2.0, 2.0),
        )
        rewards = scenario.reward_profile()
        policy = synthesize(scenario.target, scenario.contributors, rewards)
        fast = evaluate_cost(policy.agent, scenario.target, rewards)
        slow = trajectory_enumeration_cost(policy.agent, scenario.target, rewards)
        assert fast.total == pytest.approx(slow.total, abs=1e-9), f"seed={seed}"
        assert fast.kl_part == pytest.approx(slow.kl_part, abs=1e-9)
        assert fast.reward_part == pytest.approx(slow.reward_part, abs=1e-9)
        for k in range(scenario.horizon):
            assert fast.per_step[k][0] == pytest.approx(slow.per_step[k][0], abs=1e-9)
            assert fast.per_step[k][1] == pytest.approx(slow.per_step[k][1], abs=1e-9)


def test_broken_support_is_infinite_in_both_evaluators():
    space = StateSpace((0, 1))
    target = chain(space, [[1.0, 0.0], [1.0, 0.0]])
    policy = chain(space, [[0.5, 0.5], [1.0, 0.0]])
    rewards = RewardSchedule(space, np.array([[1.0, 1.0]]))
    fast = evaluate_cost(policy, target, rewards)
    slow = trajectory_enumeration_cost(policy, target, rewards)
    assert fast.kl_part == math.inf and fast.total == math.inf
    assert slow.kl_part == math.inf and slow.total == math.inf
    # rewards are still collected on the trajectories that do occur
    assert fast.reward_part == pytest.approx(1.0)
    assert slow.reward_part == pytest.approx(1.0)


def test_unreachable_violation_costs_nothing():
    # the policy's row at state 1 breaks absolute continuity, but no mass
    # ever reaches state 1, so the cost stays finite
    space = StateSpace((0, 1))
    target = chain(space, [[1.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]])
    policy = chain(space, [[1.0, 0.0], [0.5, 0.5]], [[1.0, 0.0], [0.5, 0.5]])
    rewards = RewardSchedule(space, np.zeros((2, 2)))
    fast = evaluate_cost(policy, target, rewards)
    slow = trajectory_enumeration_cost(policy, target, rewards)
    assert fast.total == 0.0
    assert slow.total == 0.0


def test_evaluators_reject_mismatched_setups():
    space = StateSpace((0, 1))
    target = chain(space, [[0.5, 0.5], [0.5, 0.5]])
    rewards = RewardSchedule(space, np.zeros((2, 2)))  # horizon 2 vs 1
    with pytest.raises(ValueError, match="horizon"):
        evaluate_cost(target, target, rewards)


def test_enumeration_guard():
    scenario = generate_random_scenario(seed=5, d=4, horizon=10, contributors=1)
    rewards = scenario.reward_profile()
    assert 4**10 > ORACLE_LIMIT
    with pytest.raises(OracleGuardError, match="refusing enumeration"):
        trajectory_enumeration_cost(pure_behavior(scenario, 0), scenario.target, rewards)


# ---------------------------------------------------------------------------
# log-sum inequality
# ---------------------------------------------------------------------------


def test_logsum_frozen_example():
    space = StateSpace((0, 1))
    components = [
        StatePMF(space, np.array([1.0, 0.0])),
        StatePMF(space, np.array([0.0, 1.0])),
    ]
    target = StatePMF(space, np.array([0.5, 0.5]))
    lhs, rhs = logsum_bound_check(WeightVector(np.array([0.5, 0.5])), components, target)
    # the mixture reconstructs the target exactly; each component costs ln 2
    assert lhs == 0.0
    assert rhs == pytest.approx(LN2, abs=1e-15)


def test_logsum_zero_weight_component_is_ignored():
    space = StateSpace((0, 1))
    good = StatePMF(space, np.array([0.25, 0.75]))
    violating = StatePMF(space, np.array([1.0, 0.0]))
    target = StatePMF(space, np.array([0.0, 1.0]))
    lhs, rhs = logsum_bound_check(WeightVector(np.array([1.0, 0.0])), [good, violating], target)
    assert math.isinf(lhs)  # the mixture itself still violates support
    assert math.isinf(rhs)
    # swap: all weight on the admissible component
    target2 = StatePMF(space, np.array([0.5, 0.5]))
    lhs2, rhs2 = logsum_bound_check(
        WeightVector(np.array([1.0, 0.0])), [good, violating], target2
    )
    assert math.isfinite(lhs2) and math.isfinite(rhs2)
    assert lhs2 == pytest.approx(rhs2, abs=1e-15)


def test_logsum_inequality_random_sweep():
    rng = np.random.Generator(np.random.Philox(2024))
    sparse_seen = 0
    for trial in range(300):
        d = int(rng.integers(2, 7))
        s = int(rng.integers(1, 6))
        space = StateSpace(tuple(range(d)))
        target = StatePMF(space, rng.dirichlet(np.ones(d)) + 1e-9, "renormalize")
        comps = []
        for _ in range(s):
            row = rng.dirichlet(np.ones(d))
            if trial % 3 == 0 and d > 2:
                row[rng.integers(0, d)] = 0.0
                row = row / row.sum()
                sparse_seen += 1
            comps.append(StatePMF(space, row, "renormalize"))
        w = WeightVector(rng.dirichlet(np.ones(s)))
        lhs, rhs = logsum_bound_check(w, comps, target)
        assert lhs <= rhs + 1e-12, f"trial={trial}"
    assert sparse_seen >= 50


def test_logsum_validation():
    space = StateSpace((0, 1))
    comp = StatePMF(space, np.array([0.5, 0.5]))
    target = StatePMF(space, np.array([0.5, 0.5]))
    with pytest.raises(ValueError, match="one weight per component"):
        logsum_bound_check(WeightVector(np.array([1.0])), [comp, comp], target)
    other = StatePMF(StateSpace((7, 8)), np.array([0.5, 0.5]))
    with pytest.raises(ValueError, match="share one state space"):
        logsum_bound_check(WeightVector(np.array([1.0])), [other], target)


# ---------------------------------------------------------------------------
# schedule oracles
# ---------------------------------------------------------------------------


def test_per_time_oracle_matches_inline_enumeration():
    # independent check: compose each schedule into a behavior and cost it
    # with evaluate_cost, then take the minimum by brute force
    scenario = generate_random_scenario(seed=77, d=3, horizon=3, contributors=2)
    rewards = scenario.reward_profile()
    result = pure_schedule_oracle(
        scenario.target, scenario.contributors, rewards, mode="per-time"
    )
    best_cost = math.inf
    best_schedule = None
    for schedule in itertools.product(range(2), repeat=3):
        behavior = Behavior(
            scenario.target.initial,
            tuple(
                scenario.contributors.kernel(i, k + 1) for k, i in enumerate(schedule)
            ),
        )
        cost = evaluate_cost(behavior, scenario.target, rewards).total
        if cost < best_cost:
            best_cost = cost
            best_schedule = schedule
    assert result.cost == pytest.approx(best_cost, abs=1e-12)
    assert tuple(result.schedule) == best_schedule


def test_dp_oracle_never_loses_to_per_time():
    for seed in range(30):
        scenario = generate_random_scenario(
            seed=200 + seed,
            d=2 + seed % 3,
            horizon=1 + seed % 4,
            contributors=2 + seed % 2,
            sparsity=0.25 if seed % 5 == 0 else 0.0,
        )
        rewards = scenario.reward_profile()
        dp = pure_schedule_oracle(
            scenario.target, scenario.contributors, rewards, mode="per-time-and-state"
        )
        pt = pure_schedule_oracle(
            scenario.target, scenario.contributors, rewards, mode="per-time"
        )
        assert dp.cost <= pt.cost + 1e-12, f"seed={seed}"


def test_dp_oracle_agrees_with_synthesized_bound():
    for seed in range(30):
        scenario = generate_random_scenario(
            seed=300 + seed,
            d=2 + seed % 4,
            horizon=1 + seed % 5,
            contributors=1 + seed % 4,
            sparsity=0.3 if seed % 4 == 0 else 0.0,
            reward_range=(-3.0, 3.0),
        )
        rewards = scenario.reward_profile()
        policy = synthesize(scenario.target, scenario.contributors, rewards)
        bound = bound_value(policy, scenario.target)
        dp = pure_schedule_oracle(
            scenario.target, scenario.contributors, rewards, mode="per-time-and-state"
        )
        assert dp.cost == pytest.approx(bound, abs=1e-9), f"seed={seed}"
        assert np.array_equal(dp.schedule, policy.selected)


def test_identical_contributors_yield_all_zero_schedules():
    scenario = generate_random_scenario(seed=9, d=2, horizon=2, contributors=1)
    twin = scenario.contributors.kernels[0]
    from crowdpolicy.synthesis import ContributorSet

    doubled = ContributorSet(scenario.space, (twin, twin), ("first", "second"))
    rewards = scenario.reward_profile()
    pt = pure_schedule_oracle(scenario.target, doubled, rewards, mode="per-time")
    dp = pure_schedule_oracle(scenario.target, doubled, rewards, mode="per-time-and-state")
    assert tuple(pt.schedule) == (0, 0)
    assert np.all(np.asarray(dp.schedule) == 0)


def test_per_time_guard_and_mode_validation():
    scenario = generate_random_scenario(seed=6, d=2, horizon=14, contributors=3)
    rewards = scenario.reward_profile()
    with pytest.raises(OracleGuardError, match="refusing schedule search"):
        pure_schedule_oracle(scenario.target, scenario.contributors, rewards, mode="per-time")
    with pytest.raises(ValueError, match="unknown mode"):
        pure_schedule_oracle(scenario.target, scenario.contributors, rewards, mode="global")


# ---------------------------------------------------------------------------
# simplex grid oracle
# ---------------------------------------------------------------------------


def test_grid_resolution_one_reduces_to_per_time():
    for seed in range(10):
        scenario = generate_random_scenario(
            seed=400 + seed, d=2 + seed % 3, horizon=1 + seed % 3, contributors=2 + seed % 2
        )
        rewards = scenario.reward_profile()
        grid = simplex_grid_oracle(scenario.target, scenario.contributors, rewards, 1)
        pt = pure_schedule_oracle(
            scenario.target, scenario.contributors, rewards, mode="per-time"
        )
        assert grid.cost == pytest.approx(pt.cost, abs=1e-12), f"seed={seed}"
        assert all(WeightVector(w).is_vertex for w in grid.weights)


def test_grid_guards():
    big = generate_random_scenario(seed=1, d=5, horizon=2, contributors=2)
    rewards = big.reward_profile()
    with pytest.raises(OracleGuardError, match="d<=4"):
        simplex_grid_oracle(big.target, big.contributors, rewards, 2)
    wide = generate_random_scenario(seed=1, d=3, horizon=2, contributors=4)
    with pytest.raises(OracleGuardError, match="S<=3"):
        simplex_grid_oracle(wide.target, wide.contributors, wide.reward_profile(), 2)
    small = generate_random_scenario(seed=1, d=3, horizon=3, contributors=3)
    with pytest.raises(OracleGuardError, match="positive integer"):
        simplex_grid_oracle(small.target, small.contributors, small.reward_profile(), 0)
    with pytest.raises(OracleGuardError, match="assignments exceed"):
        simplex_grid_oracle(small.target, small.contributors, small.reward_profile(), 150)
