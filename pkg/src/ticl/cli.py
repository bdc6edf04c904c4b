"""Command-line entry point: ``ticl <subcommand> [options]``.

``pipeline`` runs every stage in one go. The remaining subcommands expose a
single stage each, reading and writing the directory layouts described in the
README, so the output of one stage is the input of the next.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bayesnet import bundled_networks
from .experiment import (
    CACHE_ENV,
    ExperimentConfig,
    discover_cached,
    evaluate_graph,
    make_training_pairs,
    read_bundle,
    read_result,
    run_pipeline,
    simulate,
    training_config,
    write_bundle,
    write_report_csv,
    write_result,
)
from .ismcmc import McmcConfig, pairs_system_count, read_pairs, write_pairs, write_traces
from .jci import read_augmented, read_regime_manifest, write_augmented
from .metrics import report_json
from .scl import TiclModel, TrainConfig, train

DEVIATION_NOTE = (
    "Deviations from the reference defaults: the MCMC seed graph comes from BIC hill climbing, "
    "and the skeleton threshold defaults to 0.6. Both are recorded in each run manifest."
)


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--network", default="earthquake",
                   help=f"bundled name ({', '.join(bundled_networks())}) or a .bif path")
    g.add_argument("--int-frac", type=float, default=0.2, help="interventional regimes per node (default 0.2)")
    g.add_argument("--int-kind", choices=("soft", "hard"), default="soft")
    g.add_argument("--multi", type=int, choices=(1, 2, 3), default=1, help="largest target set per regime")
    g.add_argument("--n-obs", type=int, default=10000)
    g.add_argument("--n-int", type=int, default=10000)
    g.add_argument("--seed", type=int, default=0)


def _add_mcmc_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("self-augmentation")
    g.add_argument("--pairs", type=int, default=400, help="training pairs to emit")
    g.add_argument("--samples-per-pair", type=int, default=10000)
    g.add_argument("--chains", type=int, default=4)
    g.add_argument("--thin", type=int, default=50)
    g.add_argument("--burn-in", type=int, default=None, help="default: 500 x node count")
    g.add_argument("--seed-mode", choices=("proxy", "random"), default="proxy")
    g.add_argument("--source", choices=("mcmc", "random-graphs"), default="mcmc",
                   help="where training graphs come from")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for the chains")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("classifiers")
    g.add_argument("--k-max", type=int, default=4, help="largest conditioning-set size")
    g.add_argument("--skel-thresh", type=float, default=0.6)
    g.add_argument("--ori-thresh", type=float, default=0.1)


def _mcmc_config(args) -> McmcConfig:
    return McmcConfig(n_pairs=args.pairs, samples_per_pair=args.samples_per_pair, n_chains=args.chains,
                      thin=args.thin, burn_in=args.burn_in, seed_mode=args.seed_mode, jobs=args.jobs)


def _train_config(args) -> TrainConfig:
    return TrainConfig(k_max=args.k_max, skeleton_threshold=args.skel_thresh,
                       orientation_threshold=args.ori_thresh, seed=args.seed)


def _experiment_config(args, **extra) -> ExperimentConfig:
    return ExperimentConfig(network=args.network, int_frac=args.int_frac, int_kind=args.int_kind,
                            multi=args.multi, n_obs=args.n_obs, n_int=args.n_int, seed=args.seed, **extra)


def cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    bundle = simulate(cfg)
    root = write_bundle(bundle, args.out)
    print(f"wrote {len(bundle.regimes)} regime table(s) for {cfg.network} to {root}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _experiment_config(args, mcmc=_mcmc_config(args), model=_train_config(args),
                             training_source=args.source, system_only=args.system_only)
    report = run_pipeline(cfg, args.out, write_pairs_archive=args.keep_pairs)
    print(report_json(report))
    return 0


def cmd_pool(args) -> int:
    aug = read_bundle(args.bundle).pooled()
    write_augmented(aug, args.out)
    print(f"pooled {aug.table.n_rows} rows, {aug.system_count} system + {aug.k} environment columns")
    return 0


def cmd_augment(args) -> int:
    cfg = ExperimentConfig(seed=args.seed, mcmc=_mcmc_config(args), training_source=args.source)
    aug = read_augmented(args.pooled)
    pairs, traces = make_training_pairs(cfg, aug, return_traces=True)
    write_pairs(pairs, args.out, aug.system_count)
    if traces:
        write_traces(traces, Path(args.out) / "traces.csv")
    print(f"wrote {len(pairs)} training pairs to {args.out}")
    return 0


def cmd_train(args) -> int:
    pairs = read_pairs(args.pairs_dir)
    if not pairs:
        raise SystemExit(f"no training pairs under {args.pairs_dir}")
    d = args.system_count or pairs_system_count(args.pairs_dir)
    if d is None:
        raise SystemExit("system node count unknown; pass --system-count")
    cfg = ExperimentConfig(mcmc=McmcConfig(), model=_train_config(args))
    model = train(pairs, d, training_config(cfg))
    model.save(args.out)
    print(f"trained {len(model.skeleton_models)} skeleton classifiers on {len(pairs)} pairs; saved to {args.out}")
    return 0


def cmd_discover(args) -> int:
    model = TiclModel.load(args.model)
    aug = read_augmented(args.pooled)
    known = None
    if args.regimes:
        _, known = read_regime_manifest(args.regimes)
    result = discover_cached(model, aug, known)
    write_result(result, args.out, list(aug.table.columns))
    print(result.to_json(list(aug.table.columns)))
    return 0


def cmd_eval(args) -> int:
    bundle = read_bundle(args.bundle)
    graph, targets = read_result(args.result, bundle.d)
    report = evaluate_graph(bundle, graph, targets, args.system_only)
    report = {"network": Path(args.bundle).name, "seed": None, **report}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.json").write_text(report_json(report))
        write_report_csv([report], Path(args.out) / "report.csv")
    print(report_json(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ticl", description="Causal discovery from pooled observational and interventional data.",
        epilog=f"{DEVIATION_NOTE} Set {CACHE_ENV} to reuse CI scores across discovery runs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample an observational + interventional benchmark bundle")
    _add_experiment_flags(p)
    p.add_argument("--out", required=True, help="bundle directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="simulate, augment, train, discover and evaluate",
                       epilog=DEVIATION_NOTE)
    _add_experiment_flags(p)
    _add_mcmc_flags(p)
    _add_model_flags(p)
    p.add_argument("--system-only", action="store_true", help="score the system-variable subgraph only")
    p.add_argument("--keep-pairs", action="store_true", help="archive the training pairs in the run directory")
    p.add_argument("--out", default=None, help="run root; artifacts go to <out>/seed_<seed>")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("pool", help="stack a bundle's regimes into one table with environment columns")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("augment", help="generate training pairs from pooled data")
    p.add_argument("--pooled", required=True, help="directory written by `ticl pool`")
    _add_mcmc_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="fit the skeleton cascade and the orientation classifier")
    p.add_argument("--pairs-dir", required=True, help="directory written by `ticl augment`")
    p.add_argument("--system-count", type=int, default=None)
    _add_model_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("discover", help="apply a trained model to pooled data")
    p.add_argument("--model", required=True)
    p.add_argument("--pooled", required=True)
    p.add_argument("--regimes", default=None, help="regime manifest; listed targets are fixed as known")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("eval", help="score a discovery result against a bundle's ground truth")
    p.add_argument("--bundle", required=True)
    p.add_argument("--result", required=True, help="directory written by `ticl discover`")
    p.add_argument("--system-only", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"ticl {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
