"""Monte Carlo estimation of the tracking cost on the bundled demo.

Samples trajectory batches of increasing size from the synthesized agent and
watches the estimate close in on the exact value, with the 2-sigma band
shrinking like 1/sqrt(n). Also prints a handful of raw trajectories so the
CSV columns have a face.
"""

from crowdpolicy import (
    demo_scenario_path,
    evaluate_cost,
    load_scenario,
    monte_carlo_cost,
    sample_trajectories,
    synthesize,
)

PROFILE = "favor-node-3"
SEED = 12


def main() -> None:
    scenario = load_scenario(demo_scenario_path())
    rewards = scenario.rewards[PROFILE]
    policy = synthesize(scenario.target, scenario.contributors, rewards)
    exact = evaluate_cost(policy.agent, scenario.target, rewards).total

    print(f"profile {PROFILE}, exact cost {exact:+.6f}\n")
    print("   n      estimate      stderr     |error|/stderr")
    for n in (100, 1_000, 10_000, 100_000):
        mc = monte_carlo_cost(policy.agent, scenario.target, rewards, n, seed=SEED)
        ratio = abs(mc.estimate - exact) / mc.stderr if mc.stderr else float("nan")
        print(f"{n:>8}  {mc.estimate:+.6f}  {mc.stderr:>10.6f}   {ratio:10.2f}")

    print("\nfirst five sampled trajectories (same seed):")
    batch = sample_trajectories(policy.agent, 5, seed=SEED, target=scenario.target)
    for i, traj in enumerate(batch):
        route = " -> ".join(str(s) for s in traj.states)
        print(
            f"  #{i}: {route}   log p_policy {traj.log_prob_policy:+.4f}"
            f"   log p_target {traj.log_prob_target:+.4f}"
        )


if __name__ == "__main__":
    main()
