#!/usr/bin/env python3
"""Greedy-oracle performance profile under increasing clicked-item influence.

Weight 1.0 reproduces the boredom-only slate environment; lower weights drag
the user embedding toward clicked items, creating drift the myopic oracle
cannot anticipate.
"""
import argparse
import json
from pathlib import Path

from slatesim.harness import ExperimentConfig, sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--values", default="1.0,0.95,0.9,0.85")
    parser.add_argument("--policy", default="greedy_oracle")
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--episodes", type=int, default=25)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    cfg = ExperimentConfig(
        env_name="SlateTopK-BoredInf",
        policy_name=args.policy,
        seeds=tuple(range(args.seeds)),
        n_training_steps=0,
        n_validation_episodes=args.episodes,
    )
    values = [float(v) for v in args.values.split(",")]
    result = sweep(cfg, "omega", values)
    rows = result.table()
    print(f"{'omega':>8} {'return':>10} {'boredom':>10}")
    for row in rows:
        print(f"{row['value']:>8g} {row['mean_return']:>10.1f} {row['mean_boredom']:>10.1f}")
    if args.out:
        Path(args.out).write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
