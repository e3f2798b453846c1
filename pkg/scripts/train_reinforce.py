#!/usr/bin/env python3
"""Train the linear-softmax policy-gradient agent and track validation return."""
import argparse

from slatesim.harness import ExperimentConfig, emit_metrics, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--env", default="SingleItem-Static")
    parser.add_argument("--steps", type=int, default=100_000)
    parser.add_argument("--validation-every", type=int, default=50_000)
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--episodes", type=int, default=25)
    parser.add_argument("--learning-rate", type=float, default=20.0)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    cfg = ExperimentConfig(
        env_name=args.env,
        policy_name="reinforce",
        seeds=tuple(range(args.seeds)),
        n_training_steps=args.steps,
        validation_every=args.validation_every,
        n_validation_episodes=args.episodes,
        policy_kwargs={"learning_rate": args.learning_rate},
    )
    result = run_experiment(cfg)
    for agg in result.aggregates:
        print(
            f"step {agg.training_step:>7d}: return {agg.mean_return:7.2f} "
            f"+- {agg.ci_return:.2f}  boredom {agg.mean_boredom:6.2f}"
        )
    if args.out:
        paths = emit_metrics(result, args.out)
        print(f"wrote {paths[0]} and {paths[1]}")


if __name__ == "__main__":
    main()
