"""Command-line entry point.

Subcommands compose the main workflows: seeded experiment runs, parameter
sweeps, interaction-log generation, offline model fitting, online deployment
of fitted rerankers, score-distribution dumps, and throughput benchmarks.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .click_models import (
    fit_dctr,
    fit_pbm,
    normalized_propensities,
    propensity_mse,
    rerank_by_model,
)
from .config import ConfigError
from .envs import ENVIRONMENTS, env_config, make_env
from .harness import (
    EMIT_FORMATS,
    ExperimentConfig,
    SWEEP_PARAMETERS,
    emit_metrics,
    make_policy,
    run_experiment,
    score_distribution,
    sweep,
    throughput_bench,
    validate_policy,
)
from .logs import generate_log, read_log, write_log
from .mf import export_item_embeddings, fit_mf, write_item_embeddings
from .policies import POLICY_NAMES_DOC, Policy


def _parse_values(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--env", required=True, choices=sorted(ENVIRONMENTS))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--lambda", dest="lambda_scale", type=float, default=None,
                        help="override the relevance-scale hyperparameter")
    parser.add_argument("--omega", dest="influence_weight", type=float, default=None,
                        help="override the clicked-item influence weight")


def _experiment_config(args) -> ExperimentConfig:
    seeds = tuple(range(args.seed, args.seed + args.seeds))
    steps = 500_000 if args.full_scale else args.steps
    n_seeds = 5 if args.full_scale else args.seeds
    if args.full_scale:
        seeds = tuple(range(args.seed, args.seed + n_seeds))
    return ExperimentConfig(
        env_name=args.env,
        policy_name=args.policy,
        seeds=seeds,
        n_training_steps=steps,
        validation_every=args.validation_every,
        n_validation_episodes=args.episodes,
        lambda_scale=args.lambda_scale,
        influence_weight=args.influence_weight,
        item_embeddings_path=args.item_embeddings,
    )


def cmd_list_envs(args) -> int:
    for name in ENVIRONMENTS:
        cfg = env_config(name)
        print(
            f"{name:24s} L={cfg.session_length:<4d} S={cfg.slate_size:<3d} "
            f"items={cfg.n_items:<5d} topics={cfg.n_topics:<3d} "
            f"lambda={cfg.lambda_scale:<6g} mu={cfg.mu_shift:<5g} "
            f"boredom={cfg.boredom_variant:<16s} omega={cfg.influence_weight:<5g} "
            f"obs={cfg.observability}"
        )
    return 0


def cmd_run(args) -> int:
    result = run_experiment(_experiment_config(args), workers=args.workers)
    for agg in result.aggregates:
        print(
            f"checkpoint {agg.checkpoint:3d} (step {agg.training_step}): "
            f"return {agg.mean_return:.2f} +- {agg.ci_return:.2f}, "
            f"boredom {agg.mean_boredom:.2f} +- {agg.ci_boredom:.2f} "
            f"[{agg.n_seeds} seeds]"
        )
    if args.out:
        paths = emit_metrics(result, args.out, args.format)
        print(f"wrote {paths[0]} and {paths[1]}")
    return 0


def cmd_sweep(args) -> int:
    result = sweep(_experiment_config(args), args.parameter, _parse_values(args.values),
                   workers=args.workers)
    rows = result.table()
    for row in rows:
        print(
            f"{args.parameter}={row['value']:<8g} return {row['mean_return']:.2f} "
            f"+- {row['ci_return']:.2f}, boredom {row['mean_boredom']:.2f}"
        )
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        print(f"wrote {out}")
    return 0


def cmd_log(args) -> int:
    env = make_env(args.env, args.seed, args.lambda_scale, args.influence_weight)
    policy = make_policy(args.policy, env, seed=args.seed)
    log = generate_log(env, policy, args.sessions, seed=args.seed)
    write_log(log, args.out)
    print(f"wrote {len(log.rows)} rows to {args.out}")
    return 0


def cmd_fit_click_model(args) -> int:
    log = read_log(args.log)
    if args.model == "dctr":
        params = fit_dctr(log)
        payload = {
            "model": "dctr",
            "n_items": log.n_items,
            "ctr": params.ctr.tolist(),
            "never_impressed": params.never_impressed.astype(int).tolist(),
        }
    else:
        params = fit_pbm(log, max_iters=args.max_iters, tolerance=args.tolerance)
        normalized = normalized_propensities(params)
        payload = {
            "model": "pbm",
            "n_items": log.n_items,
            "obs_dim": log.obs_dim,
            "rel_weights": params.rel_weights.tolist(),
            "rel_bias": params.rel_bias.tolist(),
            "examination": params.examination.tolist(),
            "normalized_propensities": normalized.tolist(),
            "converged": params.converged,
            "final_mean_loglik": params.loglik_trace[-1],
        }
        print("normalized propensities:", np.round(normalized, 4).tolist())
        if args.true_epsilon is not None:
            true = normalized_propensities(
                args.true_epsilon ** np.arange(log.slate_size)
            )
            print(f"propensity MSE vs epsilon={args.true_epsilon}: "
                  f"{propensity_mse(normalized, true):.6f}")
    Path(args.out).write_text(json.dumps(payload) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_fit_mf(args) -> int:
    log = read_log(args.log)
    model = fit_mf(log, dim=args.dim, epochs=args.epochs, seed=args.seed)
    table = export_item_embeddings(model)
    write_item_embeddings(table, args.out)
    print(
        f"trained dim-{table.dim} embeddings on {len(log.rows)} rows "
        f"(final log-loss {model.loss_history[-1]:.4f}); wrote {args.out}"
    )
    return 0


class _FittedRerankPolicy(Policy):
    name = "fitted_rerank"

    def __init__(self, model):
        self.model = model

    def act(self, observation, env):
        items = np.arange(env.config.n_items)
        return rerank_by_model(self.model, env.full_observation(), items)[
            : env.config.slate_size
        ]


def _load_click_model(path: str):
    payload = json.loads(Path(path).read_text())
    if payload["model"] == "dctr":
        from .click_models import DctrParams

        ctr = np.asarray(payload["ctr"])
        impressions = 1 - np.asarray(payload["never_impressed"])
        return DctrParams(clicks=ctr * impressions, impressions=impressions)
    from .click_models import PbmParams

    exam = np.clip(np.asarray(payload["examination"]), 1e-9, 1 - 1e-9)
    return PbmParams(
        rel_weights=np.asarray(payload["rel_weights"]),
        rel_bias=np.asarray(payload["rel_bias"]),
        exam_raw=np.log(exam / (1 - exam)),
    )


def cmd_deploy_rerank(args) -> int:
    env = make_env(args.env, args.seed, args.lambda_scale, args.influence_weight)
    policy = _FittedRerankPolicy(_load_click_model(args.model_file))
    returns, boredoms = validate_policy(env, policy, args.seed, 0, args.episodes)
    print(
        f"online return over {args.episodes} episodes: {returns.mean():.2f} "
        f"(boredom {boredoms.mean():.2f})"
    )
    return 0


def cmd_scores(args) -> int:
    env = make_env(args.env, args.seed, args.lambda_scale, args.influence_weight)
    policy = make_policy(args.policy, env, seed=args.seed)
    counts, edges = score_distribution(env, policy, args.steps, seed=args.seed,
                                       bins=args.bins)
    rows = [
        {"bin_left": float(edges[i]), "bin_right": float(edges[i + 1]),
         "count": int(counts[i])}
        for i in range(len(counts))
    ]
    if args.out:
        Path(args.out).write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        print(f"wrote {args.out}")
    else:
        for row in rows:
            print(f"[{row['bin_left']:.2f}, {row['bin_right']:.2f}): {row['count']}")
    return 0


def cmd_bench(args) -> int:
    rate = throughput_bench(args.env, n_steps=args.steps, seed=args.seed)
    print(f"{args.env}: {rate:,.0f} steps/s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slatesim",
        description="Seeded slate-recommendation simulation and experiment harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-envs", help="show the built-in environments")

    run = sub.add_parser("run", help="seeded training/validation experiment")
    _add_common(run)
    run.add_argument("--policy", required=True, help=POLICY_NAMES_DOC)
    run.add_argument("--seeds", type=int, default=3, help="number of seeded runs")
    run.add_argument("--steps", type=int, default=100_000)
    run.add_argument("--validation-every", type=int, default=50_000)
    run.add_argument("--episodes", type=int, default=25,
                     help="validation episodes per checkpoint")
    run.add_argument("--full-scale", action="store_true",
                     help="500,000 training steps and 5 seeds")
    run.add_argument("--item-embeddings", default=None,
                     help="path to a learned item-embedding table")
    run.add_argument("--workers", type=int, default=1,
                     help="worker processes for parallel seeds")
    run.add_argument("--out", default=None)
    run.add_argument("--format", choices=EMIT_FORMATS, default="csv")

    sw = sub.add_parser("sweep", help="repeat an experiment across parameter values")
    _add_common(sw)
    sw.add_argument("--policy", required=True)
    sw.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--seeds", type=int, default=3)
    sw.add_argument("--steps", type=int, default=0)
    sw.add_argument("--validation-every", type=int, default=50_000)
    sw.add_argument("--episodes", type=int, default=25)
    sw.add_argument("--full-scale", action="store_true")
    sw.add_argument("--item-embeddings", default=None)
    sw.add_argument("--workers", type=int, default=1,
                    help="worker processes for parallel seeds")
    sw.add_argument("--out", default=None)

    lg = sub.add_parser("log", help="record interaction sessions to a log file")
    _add_common(lg)
    lg.add_argument("--policy", required=True)
    lg.add_argument("--sessions", type=int, default=1000)
    lg.add_argument("--out", required=True)

    fit = sub.add_parser("fit-click-model", help="fit dCTR or PBM on a log")
    fit.add_argument("--log", required=True)
    fit.add_argument("--model", choices=("pbm", "dctr"), default="pbm")
    fit.add_argument("--max-iters", type=int, default=5000)
    fit.add_argument("--tolerance", type=float, default=1e-6)
    fit.add_argument("--true-epsilon", type=float, default=None,
                     help="print propensity MSE against this examination decay")
    fit.add_argument("--out", required=True)

    mf = sub.add_parser("fit-mf", help="train matrix-factorization item embeddings")
    mf.add_argument("--log", required=True)
    mf.add_argument("--dim", type=int, default=10)
    mf.add_argument("--epochs", type=int, default=30)
    mf.add_argument("--seed", type=int, default=0)
    mf.add_argument("--out", required=True)

    dep = sub.add_parser("deploy-rerank", help="evaluate a fitted click model online")
    _add_common(dep)
    dep.add_argument("--model-file", required=True)
    dep.add_argument("--episodes", type=int, default=25)

    sc = sub.add_parser("scores", help="histogram of recommended-item relevance")
    _add_common(sc)
    sc.add_argument("--policy", required=True)
    sc.add_argument("--steps", type=int, default=2000)
    sc.add_argument("--bins", type=int, default=50)
    sc.add_argument("--out", default=None)

    be = sub.add_parser("bench", help="single-core steps-per-second benchmark")
    _add_common(be)
    be.add_argument("--steps", type=int, default=50_000)

    return parser


_COMMANDS = {
    "list-envs": cmd_list_envs,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "log": cmd_log,
    "fit-click-model": cmd_fit_click_model,
    "fit-mf": cmd_fit_mf,
    "deploy-rerank": cmd_deploy_rerank,
    "scores": cmd_scores,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
