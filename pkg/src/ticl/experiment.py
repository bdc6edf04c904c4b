"""Benchmark simulation and the end-to-end pipeline behind the CLI."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import platform
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bayesnet import (
    DataTable,
    DiscreteBayesNet,
    InterventionFamily,
    apply_intervention,
    forward_sample,
    load_network,
    network_from_json,
    network_to_json,
    read_table_csv,
    write_table_csv,
)
from .citest import CITester
from .graphlib import PDAG, icpdag_of, read_pdag_csv, write_pdag_csv
from .ismcmc import McmcConfig, random_graph_pairs, regime_weights, run_self_augmentation, write_pairs, write_traces
from .jci import AugmentedDataset, augment_graph, family_from_manifest, pool, write_regime_manifest
from .metrics import evaluation_report
from .scl import DiscoveryResult, TiclModel, TrainConfig, detect_targets, discover, train

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("network", "seed", "shd", "sid", "f1", "precision", "recall", "target_f1")


@dataclass(frozen=True)
class ExperimentConfig:
    network: str = "earthquake"
    int_frac: float = 0.2
    int_kind: str = "soft"
    multi: int = 1  # largest target-set size per regime
    n_obs: int = 10000
    n_int: int = 10000
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    model: TrainConfig = field(default_factory=TrainConfig)
    training_source: str = "mcmc"  # or "random-graphs"
    seed: int = 0
    system_only: bool = False

    def __post_init__(self):
        if not 0 <= self.int_frac <= 1:
            raise ValueError("int_frac must lie in [0, 1]")
        if self.n_obs < 1 or self.n_int < 1:
            raise ValueError("sample counts must be positive")
        if not 1 <= self.multi <= 3:
            raise ValueError("multi must be 1, 2 or 3")
        if self.training_source not in ("mcmc", "random-graphs"):
            raise ValueError(f"unknown training_source {self.training_source!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Independent stream per (master seed, stage name)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(stage.encode()),)))


def draw_family(d: int, frac: float, kind: str, multi: int, rng: np.random.Generator) -> InterventionFamily:
    """``ceil(d * frac)`` regimes; single targets are distinct nodes, multi targets 1..multi nodes each."""
    k = math.ceil(d * frac - 1e-9)
    if multi == 1:
        targets = [[int(t)] for t in rng.choice(d, size=min(k, d), replace=False)]
    else:
        targets = [rng.choice(d, size=int(rng.integers(1, multi + 1)), replace=False).tolist() for _ in range(k)]
    return InterventionFamily.from_targets(targets, kind)


@dataclass
class Bundle:
    net: DiscreteBayesNet
    fam: InterventionFamily
    regimes: list[DataTable]

    @property
    def d(self) -> int:
        return self.net.n_nodes

    @property
    def truth_dag(self) -> np.ndarray:
        return self.net.dag

    @property
    def truth_augmented(self) -> np.ndarray:
        return augment_graph(self.truth_dag, self.fam)

    def truth_icpdag(self, view: str = "augmented") -> PDAG:
        return icpdag_of(self.truth_dag, self.fam, view)

    def pooled(self) -> AugmentedDataset:
        return pool(self.regimes, self.fam)


def simulate(cfg: ExperimentConfig, rng: np.random.Generator | None = None) -> Bundle:
    rng = rng or stage_rng(cfg.seed, "simulate")
    net = load_network(cfg.network)
    fam = draw_family(net.n_nodes, cfg.int_frac, cfg.int_kind, cfg.multi, rng)
    regimes = [forward_sample(net, cfg.n_obs, rng, regime=0)]
    for r, spec in enumerate(fam.regimes[1:], start=1):
        regimes.append(forward_sample(apply_intervention(net, spec, rng), cfg.n_int, rng, regime=r))
    # interventions keep the observational schema
    regimes = [DataTable(net.nodes, t.values, net.cardinalities, t.regime_id) for t in regimes]
    return Bundle(net, fam, regimes)


def write_bundle(bundle: Bundle, directory: str | Path) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    (root / "network.json").write_text(network_to_json(bundle.net))
    write_regime_manifest(bundle.fam, root / "regimes.json")
    write_regime_manifest(bundle.fam, root / "regimes_unknown.json", known=False)
    for r, table in enumerate(bundle.regimes):
        write_table_csv(table, root / ("observational.csv" if r == 0 else f"regime_{r}.csv"))
    (root / "truth.edges").write_text(PDAG.from_dag(bundle.truth_dag).to_edge_list(bundle.net.nodes))
    write_pdag_csv(bundle.truth_icpdag(), root / "truth_icpdag.csv")
    return root


def read_bundle(directory: str | Path) -> Bundle:
    root = Path(directory)
    net = network_from_json((root / "network.json").read_text())
    fam = family_from_manifest(root / "regimes.json")
    regimes = [read_table_csv(root / "observational.csv", net.cardinalities)]
    regimes += [read_table_csv(root / f"regime_{r}.csv", net.cardinalities) for r in range(1, fam.k + 1)]
    return Bundle(net, fam, regimes)


def make_training_pairs(cfg: ExperimentConfig, aug: AugmentedDataset, return_traces: bool = False):
    rng = stage_rng(cfg.seed, "augment")
    if cfg.training_source == "random-graphs":
        pairs = random_graph_pairs(aug.constraints, aug.table.cardinalities, aug.table.columns,
                                   cfg.mcmc.n_pairs, cfg.mcmc.samples_per_pair, rng,
                                   weights=regime_weights(aug) if cfg.mcmc.env_sampling == "regime" else None)
        return (pairs, []) if return_traces else pairs
    return run_self_augmentation(aug, cfg.mcmc, rng, return_traces)


def training_config(cfg: ExperimentConfig) -> TrainConfig:
    """Classifier settings with label coupling matched to how env columns were sampled."""
    return dataclasses.replace(cfg.model, couple_env=cfg.mcmc.env_sampling == "regime")


CACHE_ENV = "TICL_CACHE_DIR"


def discover_cached(model: TiclModel, aug: AugmentedDataset, known=None) -> DiscoveryResult:
    """:func:`discover`, reusing CI scores stored under ``$TICL_CACHE_DIR`` when it is set."""
    cache_dir = os.environ.get(CACHE_ENV)
    if not cache_dir:
        return discover(model, aug, known)
    ci = CITester(aug.table, model.z_scale, model.reference_rows)
    ci.load_cache(cache_dir)
    result = discover(model, aug, known, ci=ci)
    ci.save_cache(cache_dir)
    return result


def evaluate(bundle: Bundle, result: DiscoveryResult, system_only: bool = False) -> dict:
    return evaluate_graph(bundle, result.graph, result.targets, system_only)


def evaluate_graph(bundle: Bundle, graph: PDAG, targets, system_only: bool = False) -> dict:
    if system_only:
        truth, pred, dag = bundle.truth_icpdag("system"), graph.restrict(range(bundle.d)), bundle.truth_dag
    else:
        truth, pred, dag = bundle.truth_icpdag(), graph, bundle.truth_augmented
    return evaluation_report(truth, pred, dag, bundle.fam, targets)


def _versions() -> dict:
    import scipy

    out = {"ticl": __version__, "python": platform.python_version(), "numpy": np.__version__,
           "scipy": scipy.__version__}
    try:
        import xgboost

        out["xgboost"] = xgboost.__version__
    except ImportError:  # pragma: no cover
        import sklearn

        out["scikit-learn"] = sklearn.__version__
    return out


def run_pipeline(cfg: ExperimentConfig, out_dir: str | Path | None = None, write_pairs_archive: bool = False) -> dict:
    """simulate -> pool -> self-augment -> train -> discover -> evaluate.

    Artifacts land under ``out_dir/seed_<seed>`` when ``out_dir`` is given.
    The returned report is a pure function of ``cfg``.
    """
    stage = "simulate"
    try:
        t0 = time.perf_counter()
        bundle = simulate(cfg)
        stage = "pool"
        aug = bundle.pooled()
        stage = "augment"
        pairs, traces = make_training_pairs(cfg, aug, return_traces=True)
        stage = "train"
        model = train(pairs, bundle.d, training_config(cfg))
        stage = "discover"
        result = discover_cached(model, aug)
        stage = "eval"
        report = evaluate(bundle, result, cfg.system_only)
    except Exception as exc:
        raise RuntimeError(f"pipeline failed in stage {stage!r}: {exc}") from exc
    report = {"network": cfg.network, "seed": cfg.seed, **report,
              "predicted_targets": {str(k): sorted(v) for k, v in result.targets.items()},
              "true_targets": {str(r): sorted(t) for r, t in enumerate(bundle.fam.target_sets, start=1)}}
    if out_dir is not None:
        run = Path(out_dir) / f"seed_{cfg.seed}"
        write_bundle(bundle, run / "bundle")
        if write_pairs_archive:
            write_pairs(pairs, run / "pairs", bundle.d)
        if traces:
            write_traces(traces, run / "traces.csv")
        model.save(run / "model")
        names = list(bundle.net.nodes) + [f"__env_{r}" for r in range(1, bundle.fam.k + 1)]
        write_result(result, run, names)
        (run / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True))
        write_report_csv([report], run / "report.csv")
        (run / "manifest.json").write_text(json.dumps({
            "config": cfg.to_dict(), "config_hash": cfg.digest(), "seed": cfg.seed,
            "versions": _versions(), "elapsed_seconds": round(time.perf_counter() - t0, 3),
            "deviations": {"proxy": "BIC hill climbing", "skeleton_threshold": cfg.model.skeleton_threshold},
        }, indent=1, sort_keys=True))
    return report


def write_report_csv(reports, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in reports:
            fh.write(",".join("" if r.get(c) is None else str(r.get(c)) for c in REPORT_COLUMNS) + "\n")


def write_result(result: DiscoveryResult, directory: str | Path, names=None) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    (root / "result.json").write_text(result.to_json(names))
    write_pdag_csv(result.graph, root / "result_graph.csv")


def read_result(directory: str | Path, system_count: int) -> tuple[PDAG, dict[int, frozenset[int]]]:
    """Predicted augmented graph and the targets read off its environment edges."""
    graph = read_pdag_csv(Path(directory) / "result_graph.csv")
    return graph, detect_targets(graph, system_count)


def load_model(directory: str | Path) -> TiclModel:
    return TiclModel.load(directory)
