#!/usr/bin/env python3
"""Single-core steps-per-second benchmark across the built-in environments."""
import argparse

from slatesim.envs import list_envs
from slatesim.harness import throughput_bench


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=50_000)
    parser.add_argument("--envs", default="SingleItem-Static,SlateTopK-Bored")
    args = parser.parse_args()

    names = list_envs() if args.envs == "all" else args.envs.split(",")
    for name in names:
        rate = throughput_bench(name, n_steps=args.steps)
        print(f"{name:24s} {rate:>10,.0f} steps/s")


if __name__ == "__main__":
    main()
