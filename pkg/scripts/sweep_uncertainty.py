#!/usr/bin/env python3
"""Greedy-vs-random return gap across click-uncertainty levels.

Lowering the relevance scale makes clicks on irrelevant items more likely;
the gap between the greedy oracle and random recommendations shrinks and
eventually inverts.
"""
import argparse

import numpy as np

from slatesim.envs import make_env
from slatesim.harness import make_policy, validate_policy


def mean_return(lam, policy_name, seeds, episodes):
    values = []
    for seed in range(seeds):
        env = make_env("SlateTopK-Uncertain", seed, lambda_scale=lam)
        policy = make_policy(policy_name, env, seed=seed)
        returns, _ = validate_policy(env, policy, seed, 0, episodes)
        values.append(returns.mean())
    return float(np.mean(values))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="100,10,5,2")
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--episodes", type=int, default=25)
    args = parser.parse_args()

    print(f"{'lambda':>8} {'greedy':>8} {'random':>8} {'gap':>8}")
    for lam in (float(v) for v in args.values.split(",")):
        greedy = mean_return(lam, "greedy_oracle", args.seeds, args.episodes)
        random_ = mean_return(lam, "random", args.seeds, args.episodes)
        print(f"{lam:>8g} {greedy:>8.1f} {random_:>8.1f} {greedy - random_:>8.1f}")


if __name__ == "__main__":
    main()
