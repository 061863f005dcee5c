"""Sampling, most-likely routes, and Monte Carlo estimation."""

import math

import numpy as np
import pytest

from crowdpolicy.evaluation import evaluate_cost
from crowdpolicy.model import (
    Behavior,
    RewardSchedule,
    StatePMF,
    StateSpace,
    TransitionKernel,
)
from crowdpolicy.scenario import generate_random_scenario
from crowdpolicy.simulate import (
    monte_carlo_cost,
    most_likely_trajectory,
    sample_trajectories,
    write_trajectories_csv,
)
from crowdpolicy.synthesis import synthesize


def behavior(space, initial, *rows_per_step):
    return Behavior(
        StatePMF(space, np.asarray(initial, dtype=float)),
        tuple(TransitionKernel(space, np.asarray(r, dtype=float)) for r in rows_per_step),
    )


def test_same_seed_same_batch():
    scenario = generate_random_scenario(seed=3, d=4, horizon=3, contributors=2)
    first = sample_trajectories(scenario.target, 50, seed=99)
    second = sample_trajectories(scenario.target, 50, seed=99)
    assert [t.states for t in first] == [t.states for t in second]
    third = sample_trajectories(scenario.target, 50, seed=100)
    assert [t.states for t in first] != [t.states for t in third]


def test_sampled_frequencies_track_the_kernel():
    space = StateSpace(("s", "t"))
    chain = behavior(space, [1.0, 0.0], [[0.25, 0.75], [0.25, 0.75]])
    batch = sample_trajectories(chain, 20000, seed=11)
    hits = sum(1 for t in batch if t.states[1] == "s")
    freq = hits / 20000
    # 4 sigma around 0.25 at n = 20000 is roughly +/- 0.0122
    assert abs(freq - 0.25) < 0.0125


def test_trajectory_log_probs():
    space = StateSpace(("s", "t"))
    chain = behavior(space, [0.5, 0.5], [[0.8, 0.2], [0.8, 0.2]])
    batch = sample_trajectories(chain, 10, seed=1)
    for traj in batch:
        expected = math.log(0.5) + math.log(
            0.8 if traj.states[1] == "s" else 0.2
        )
        assert traj.log_prob_policy == pytest.approx(expected, abs=1e-12)
        assert traj.log_prob_target is None


def test_target_log_prob_is_minus_inf_off_support():
    space = StateSpace(("s", "t"))
    policy = behavior(space, [1.0, 0.0], [[0.5, 0.5], [0.5, 0.5]])
    target = behavior(space, [1.0, 0.0], [[1.0, 0.0], [1.0, 0.0]])
    batch = sample_trajectories(policy, 200, seed=4, target=target)
    offs = [t for t in batch if t.states[1] == "t"]
    ons = [t for t in batch if t.states[1] == "s"]
    assert offs and ons  # both branches sampled
    assert all(t.log_prob_target == -math.inf for t in offs)
    assert all(t.log_prob_target == pytest.approx(0.0) for t in ons)


def test_zero_probability_states_are_never_sampled():
    # a trailing zero-probability state must not be reachable through
    # inverse-CDF rounding, even when the row sum is a hair under 1
    space = StateSpace((0, 1, 2))
    row = [0.7, 0.3 - 4e-10, 0.0]
    chain = behavior(space, [1.0, 0.0, 0.0], [row, row, row])
    batch = sample_trajectories(chain, 50000, seed=21)
    assert all(t.states[1] != 2 for t in batch)


def test_count_validation():
    scenario = generate_random_scenario(seed=3, d=2, horizon=1, contributors=1)
    with pytest.raises(ValueError, match="count"):
        sample_trajectories(scenario.target, 0, seed=1)
    with pytest.raises(ValueError, match="count"):
        monte_carlo_cost(
            scenario.target, scenario.target, scenario.reward_profile(), 0, 1
        )


# ---------------------------------------------------------------------------
# most likely trajectory
# ---------------------------------------------------------------------------


def test_most_likely_demo_routes(demo):
    for profile, route in (
        ("favor-node-2", (1, 2, 4, 6, 6)),
        ("favor-node-3", (1, 3, 5, 6, 6)),
    ):
        policy = synthesize(demo.target, demo.contributors, demo.rewards[profile])
        best = most_likely_trajectory(policy.agent)
        assert best.states == route


def test_most_likely_is_lexicographically_smallest_on_ties():
    space = StateSpace((0, 1))
    uniform = behavior(space, [0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]])
    best = most_likely_trajectory(uniform)
    assert best.states == (0, 0, 0)
    assert best.log_prob_policy == pytest.approx(3 * math.log(0.5))


def test_most_likely_prefers_probability_over_index():
    space = StateSpace((0, 1))
    skewed = behavior(space, [0.3, 0.7], [[0.5, 0.5], [0.1, 0.9]])
    best = most_likely_trajectory(skewed)
    # 0.7 * 0.9 beats every path through state 0
    assert best.states == (1, 1)


# ---------------------------------------------------------------------------
# Monte Carlo cost
# ---------------------------------------------------------------------------


def test_point_mass_estimate_is_exact():
    space = StateSpace(("a", "b"))
    step = [[0.0, 1.0], [0.0, 1.0]]
    policy = behavior(space, [1.0, 0.0], step, step)
    rewards = RewardSchedule(space, np.array([[0.0, 1.0], [0.0, 1.0]]))
    result = monte_carlo_cost(policy, policy, rewards, count=100, seed=0)
    assert result.estimate == -2.0
    assert result.stderr == 0.0
    assert result.count == 100


def test_single_sample_has_zero_stderr():
    space = StateSpace(("a", "b"))
    policy = behavior(space, [0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
    rewards = RewardSchedule(space, np.zeros((1, 2)))
    result = monte_carlo_cost(policy, policy, rewards, count=1, seed=5)
    assert result.stderr == 0.0


def test_estimate_matches_exact_cost_within_four_stderr():
    for seed in (17, 18, 19):
        scenario = generate_random_scenario(
            seed=seed, d=3, horizon=3, contributors=2, reward_range=(-1.0, 1.0)
        )
        rewards = scenario.reward_profile()
        policy = synthesize(scenario.target, scenario.contributors, rewards)
        exact = evaluate_cost(policy.agent, scenario.target, rewards).total
        mc = monte_carlo_cost(policy.agent, scenario.target, rewards, 20000, seed=seed)
        assert mc.stderr > 0
        assert abs(mc.estimate - exact) <= 4 * mc.stderr, f"seed={seed}"


def test_dead_trajectory_raises_with_coordinates():
    space = StateSpace(("a", "b"))
    policy = behavior(space, [1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]])
    target = behavior(space, [1.0, 0.0], [[1.0, 0.0], [1.0, 0.0]])
    rewards = RewardSchedule(space, np.zeros((1, 2)))
    with pytest.raises(ValueError, match="target probability 0 at step 1"):
        monte_carlo_cost(policy, target, rewards, count=10, seed=2)


def test_monte_carlo_setup_validation():
    s2 = StateSpace(("a", "b"))
    policy = behavior(s2, [0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
    short = RewardSchedule(s2, np.zeros((2, 2)))
    with pytest.raises(ValueError, match="horizon"):
        monte_carlo_cost(policy, policy, short, count=5, seed=0)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def test_trajectory_csv_golden(tmp_path):
    space = StateSpace(("a", "b"))
    policy = behavior(space, [1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]])
    target = behavior(space, [1.0, 0.0], [[0.5, 0.5], [0.5, 0.5]])
    with_target = sample_trajectories(policy, 1, seed=0, target=target)
    without = sample_trajectories(policy, 1, seed=0)
    path = tmp_path / "t.csv"
    write_trajectories_csv(with_target + without, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "trajectory,x_0,x_1,log_prob_policy,log_prob_target"
    assert lines[1] == f"0,a,b,0.0,{math.log(0.5)!r}"
    assert lines[2] == "1,a,b,0.0,"


def test_trajectory_csv_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError, match="empty"):
        write_trajectories_csv([], tmp_path / "x.csv")
    space = StateSpace(("a", "b"))
    policy = behavior(space, [1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]])
    one = sample_trajectories(policy, 1, seed=0)
    two_steps = behavior(space, [1.0, 0.0], [[0.0, 1.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 1.0]])
    other = sample_trajectories(two_steps, 1, seed=0)
    with pytest.raises(ValueError, match="inconsistent lengths"):
        write_trajectories_csv(one + other, tmp_path / "x.csv")
