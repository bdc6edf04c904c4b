"""Two-phase supervised causal learning: a cascade of per-order skeleton
classifiers followed by an unshielded-triple orientation classifier."""

from __future__ import annotations

import json
import logging
import pickle
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .citest import Z_MAX, CITester, OracleCI, z_of_p
from .featurize import (
    OLP_CENTER_INDEX,
    SEPSET_ALPHA,
    SUBSET_CAP,
    EmbeddingBasis,
    find_sepsets,
    orientation_features,
    orientation_label,
    side_subsets,
    skeleton_features,
    skeleton_label,
)
from .graphlib import PDAG, CycleError, _has_directed_cycle, meek_closure
from .ismcmc import TrainingPair
from .jci import AugmentedDataset, JciConstraints

log = logging.getLogger(__name__)

MODEL_FORMAT = "ticl-model/1"


# ---------------------------------------------------------------------------
# Classifiers


class BinaryClassifier(Protocol):
    kind: str

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BinaryClassifier": ...

    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...

    def save(self, directory: Path, stem: str) -> dict: ...


@dataclass
class ConstantClassifier:
    p: float = 1.0
    kind: str = "constant"

    def fit(self, X, y):
        self.p = float(np.mean(y)) if len(y) else self.p
        return self

    def predict_proba(self, X):
        return np.full(len(X), self.p)

    def save(self, directory, stem):
        return {"kind": self.kind, "p": self.p}


@dataclass
class MinDependenceRule:
    """Keeps an edge (probability 1) iff its weakest conditional dependence is significant."""

    min_index: int
    size_index: int
    threshold: float
    kind: str = "min-dependence"

    def fit(self, X, y):
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        keep = (X[:, self.size_index] == 0) | (X[:, self.min_index] > self.threshold)
        return keep.astype(float)

    def save(self, directory, stem):
        return {"kind": self.kind, "min_index": self.min_index, "size_index": self.size_index,
                "threshold": self.threshold}


@dataclass
class CenterOverlapRule:
    """Probability 1 of a non-collider iff the centre node overlaps the separating sets."""

    index: int = OLP_CENTER_INDEX
    kind: str = "center-overlap"

    def fit(self, X, y):
        return self

    def predict_proba(self, X):
        return (np.atleast_2d(X)[:, self.index] > 0).astype(float)

    def save(self, directory, stem):
        return {"kind": self.kind, "index": self.index}


def _xgboost():
    try:
        import xgboost
    except ImportError:  # pragma: no cover - exercised only without xgboost
        return None
    return xgboost


@dataclass
class GBDTClassifier:
    """Gradient-boosted trees with logistic loss.

    Uses xgboost when installed, else scikit-learn's histogram booster.
    Single-class training labels degrade to a :class:`ConstantClassifier`.
    """

    n_rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    seed: int = 0
    backend: str = "auto"
    kind: str = "gbdt"
    _model: object = None
    _constant: ConstantClassifier | None = None

    def __post_init__(self):
        if self.backend == "auto":
            self.backend = "xgboost" if _xgboost() is not None else "sklearn"

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) == 0 or y.min() == y.max():
            log.info("degenerate labels (%d rows); using constant prior", len(y))
            self._constant = ConstantClassifier(float(y[0]) if len(y) else 1.0)
            self._model = None
            return self
        self._constant = None
        if self.backend == "xgboost":
            xgb = _xgboost()
            params = {"objective": "binary:logistic", "max_depth": self.max_depth, "eta": self.learning_rate,
                      "tree_method": "hist", "nthread": 1, "seed": self.seed, "verbosity": 0}
            self._model = xgb.train(params, xgb.DMatrix(X, label=y), num_boost_round=self.n_rounds)
        else:
            from sklearn.ensemble import HistGradientBoostingClassifier

            self._model = HistGradientBoostingClassifier(
                max_iter=self.n_rounds, max_depth=self.max_depth, learning_rate=self.learning_rate,
                early_stopping=False, random_state=self.seed).fit(X, y)
        return self

    def predict_proba(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._constant is not None:
            return self._constant.predict_proba(X)
        if self._model is None:
            raise RuntimeError("classifier is not fitted")
        if self.backend == "xgboost":
            return self._model.predict(_xgboost().DMatrix(X)).astype(float)
        return self._model.predict_proba(X)[:, 1]

    def save(self, directory, stem):
        spec = {"kind": self.kind, "backend": self.backend, "n_rounds": self.n_rounds,
                "max_depth": self.max_depth, "learning_rate": self.learning_rate, "seed": self.seed}
        if self._constant is not None:
            spec["constant"] = self._constant.p
        elif self.backend == "xgboost":
            spec["file"] = f"{stem}.ubj"
            (Path(directory) / spec["file"]).write_bytes(bytes(self._model.save_raw("ubj")))
        else:
            spec["file"] = f"{stem}.pkl"
            (Path(directory) / spec["file"]).write_bytes(pickle.dumps(self._model))
        return spec


def load_classifier(spec: dict, directory: Path) -> BinaryClassifier:
    kind = spec["kind"]
    if kind == "constant":
        return ConstantClassifier(spec["p"])
    if kind == "min-dependence":
        return MinDependenceRule(spec["min_index"], spec["size_index"], spec["threshold"])
    if kind == "center-overlap":
        return CenterOverlapRule(spec["index"])
    if kind == "gbdt":
        clf = GBDTClassifier(spec["n_rounds"], spec["max_depth"], spec["learning_rate"], spec["seed"],
                             spec["backend"])
        if "constant" in spec:
            clf._constant = ConstantClassifier(spec["constant"])
        elif spec["backend"] == "xgboost":
            xgb = _xgboost()
            booster = xgb.Booster()
            booster.load_model(bytearray((directory / spec["file"]).read_bytes()))
            clf._model = booster
        else:
            clf._model = pickle.loads((directory / spec["file"]).read_bytes())
        return clf
    raise ValueError(f"unknown classifier kind {kind!r}")


# ---------------------------------------------------------------------------
# Model and configuration


@dataclass(frozen=True)
class TrainConfig:
    k_max: int = 4
    skeleton_threshold: float = 0.6
    orientation_threshold: float = 0.1
    embedding_dim: int = 15
    basis_seed: int = 0
    cascade: str = "oracle"  # between-order pruning: "oracle" (ground truth) or "model"
    label_mode: str = "survival"  # "survival": kept by oracle PC at this order; "adjacency"
    subset_cap: int = SUBSET_CAP
    sepset_alpha: float = SEPSET_ALPHA
    backend: str = "auto"
    z_scale: str = "erfc"
    couple_env: bool = True  # regime indicators are mutually exclusive in pooled data
    calibrate_rows: bool = True  # rescale test-time G-squared to the training sample size
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.skeleton_threshold < 1 and 0 < self.orientation_threshold < 1):
            raise ValueError("thresholds must lie in (0, 1)")
        if self.k_max < 0:
            raise ValueError("k_max must be non-negative")
        if self.cascade not in ("oracle", "model"):
            raise ValueError(f"unknown cascade mode {self.cascade!r}")
        if self.label_mode not in ("survival", "adjacency"):
            raise ValueError(f"unknown label mode {self.label_mode!r}")


@dataclass
class TiclModel:
    """One skeleton classifier per conditioning order ``0..k_max`` plus an orientation classifier."""

    skeleton_models: list
    orientation_model: object
    basis: EmbeddingBasis
    skeleton_threshold: float = 0.6
    orientation_threshold: float = 0.1
    subset_cap: int = SUBSET_CAP
    sepset_alpha: float = SEPSET_ALPHA
    z_scale: str = "erfc"
    reference_rows: int | None = None  # G-squared is rescaled to this sample size at discovery

    @property
    def k_max(self) -> int:
        return len(self.skeleton_models) - 1

    def save(self, directory: str | Path) -> None:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        doc = {
            "format": MODEL_FORMAT,
            "skeleton_threshold": self.skeleton_threshold,
            "orientation_threshold": self.orientation_threshold,
            "subset_cap": self.subset_cap,
            "sepset_alpha": self.sepset_alpha,
            "z_scale": self.z_scale,
            "reference_rows": self.reference_rows,
            "skeleton_models": [m.save(root, f"skeleton_{k}") for k, m in enumerate(self.skeleton_models)],
            "orientation_model": self.orientation_model.save(root, "orientation"),
        }
        (root / "basis.json").write_text(json.dumps(self.basis.to_dict()))
        (root / "config.json").write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, directory: str | Path) -> "TiclModel":
        root = Path(directory)
        doc = json.loads((root / "config.json").read_text())
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {doc.get('format')!r}")
        return cls(
            [load_classifier(s, root) for s in doc["skeleton_models"]],
            load_classifier(doc["orientation_model"], root),
            EmbeddingBasis.from_dict(json.loads((root / "basis.json").read_text())),
            doc["skeleton_threshold"], doc["orientation_threshold"], doc["subset_cap"],
            doc["sepset_alpha"], doc.get("z_scale", "erfc"), doc.get("reference_rows"),
        )


def static_pc_classifiers(k_max: int = 4, alpha: float = SEPSET_ALPHA, embedding_dim: int = 15) -> TiclModel:
    """PC's decision logic expressed as fixed classifiers over the learned feature layout."""
    m = embedding_dim
    rule = MinDependenceRule(min_index=m + 1, size_index=m + 4, threshold=z_of_p(alpha))
    return TiclModel([rule] * (k_max + 1), CenterOverlapRule(), EmbeddingBasis.make(m),
                     skeleton_threshold=0.5, orientation_threshold=0.5, sepset_alpha=alpha)


# ---------------------------------------------------------------------------
# Cascade machinery


def legal_skeleton(c: JciConstraints) -> list[set[int]]:
    legal = c.legal_mask()
    und = legal | legal.T
    return [set(np.flatnonzero(und[v]).tolist()) for v in range(c.n)]


def label_graph(graph: np.ndarray, system_count: int, couple_env: bool = True) -> np.ndarray:
    """Ground-truth graph used for d-separation labels.

    With ``couple_env`` the environment nodes get a complete DAG among
    themselves, which represents any joint law of the regime indicators
    (one-hot columns are dependent even though no edge links them).
    """
    g = np.asarray(graph, dtype=bool).copy()
    if couple_env:
        n = g.shape[0]
        for a in range(system_count, n):
            g[a, a + 1:] = True
    return g


def _edges(adj: Sequence[set[int]], fixed: set[tuple[int, int]]) -> list[tuple[int, int]]:
    return [(i, j) for i in range(len(adj)) for j in sorted(adj[i]) if i < j and (i, j) not in fixed]


def _initial_confidence(ci, adj: Sequence[set[int]]) -> np.ndarray:
    n = len(adj)
    conf = np.zeros((n, n))
    for i in range(n):
        for j in adj[i]:
            if i < j:
                conf[i, j] = conf[j, i] = min(1.0, ci.dep(i, j, ()) / Z_MAX)
    return conf


def _order_features(ci, adj, conf, k, basis, cap, fixed):
    feats = []
    for i, j in _edges(adj, fixed):
        if not side_subsets(adj, i, j, k, cap):
            continue
        feats.append(skeleton_features(ci, adj, conf, (i, j), k, basis, cap))
    return feats


def _remove(adj: list[set[int]], i: int, j: int) -> None:
    adj[i].discard(j)
    adj[j].discard(i)


def _candidate_triples(adj: Sequence[set[int]], c: JciConstraints) -> list[tuple[int, int, int]]:
    out = []
    for mid in range(len(adj)):
        if c.is_env(mid):
            continue
        nb = sorted(adj[mid])
        for x in range(len(nb)):
            for y in range(x + 1, len(nb)):
                a, b = nb[x], nb[y]
                if b in adj[a] or (c.is_env(a) and c.is_env(b)):
                    continue
                out.append((a, mid, b))
    return out


def _triple_sepsets(ci, adj, triple, sepsets1, alpha, max_size, cap):
    a, _, b = triple
    found = find_sepsets(ci, adj, a, b, alpha, max_size, cap)
    if not found and (min(a, b), max(a, b)) in sepsets1:
        found = [sepsets1[(min(a, b), max(a, b))]]
    return found


# ---------------------------------------------------------------------------
# Training


def _matrix(rows: list) -> np.ndarray:
    return np.array(rows, dtype=float) if rows else np.empty((0, 0))


def train(pairs: Sequence[TrainingPair], system_count: int, cfg: TrainConfig = TrainConfig()) -> TiclModel:
    """Fit the skeleton cascade and the orientation classifier on training pairs."""
    if not pairs:
        raise ValueError("training needs at least one pair")
    basis = EmbeddingBasis.make(cfg.embedding_dim, cfg.basis_seed)
    states = []
    for pair in pairs:
        n = pair.graph.shape[0]
        c = JciConstraints(system_count, n - system_count)
        ci = CITester(pair.data, cfg.z_scale)
        adj = legal_skeleton(c)
        oracle = OracleCI(label_graph(pair.graph, system_count, cfg.couple_env))
        states.append({"c": c, "ci": ci, "truth": pair.graph, "adj": adj, "oracle": oracle,
                       "conf": _initial_confidence(ci, adj)})
    skeleton_models = []
    for k in range(cfg.k_max + 1):
        per_pair, labels = [], []
        for s in states:
            feats = _order_features(s["ci"], s["adj"], s["conf"], k, basis, cfg.subset_cap, set())
            per_pair.append(feats)
            if cfg.label_mode == "adjacency":
                labels.append([skeleton_label(s["truth"], *f.pair) for f in feats])
            else:
                # kept iff no size-k conditioning set separates the pair in the true graph
                labels.append([not any(s["oracle"].independent(*f.pair, S)
                                       for S in side_subsets(s["adj"], *f.pair, k, cfg.subset_cap))
                               for f in feats])
        X = [f.vector for feats in per_pair for f in feats]
        y = [lab for labs in labels for lab in labs]
        clf = GBDTClassifier(seed=cfg.seed + k, backend=cfg.backend)
        clf.fit(_matrix(X), np.array(y, dtype=float))
        skeleton_models.append(clf)
        for s, feats, labs in zip(states, per_pair, labels):
            if not feats:
                continue
            probs = clf.predict_proba(np.array([f.vector for f in feats]))
            drops = []
            for f, p, lab in zip(feats, probs, labs):
                i, j = f.pair
                s["conf"][i, j] = s["conf"][j, i] = p
                if cfg.cascade == "model":
                    drop = p < cfg.skeleton_threshold
                elif cfg.label_mode == "survival":
                    drop = not lab
                else:
                    drop = any(s["oracle"].independent(i, j, S)
                               for S in side_subsets(s["adj"], i, j, k, cfg.subset_cap))
                if drop:
                    drops.append((i, j))
            for i, j in drops:  # removals after the whole order, as in PC-stable
                _remove(s["adj"], i, j)
    X, y = [], []
    for s in states:
        for t in _candidate_triples(s["adj"], s["c"]):
            seps = find_sepsets(s["ci"], s["adj"], t[0], t[2], cfg.sepset_alpha, cfg.k_max, cfg.subset_cap)
            X.append(orientation_features(s["ci"], s["adj"], seps, t).vector)
            y.append(not orientation_label(s["truth"], t))  # target: non-collider
    ori = GBDTClassifier(seed=cfg.seed + 1000, backend=cfg.backend)
    ori.fit(_matrix(X), np.array(y, dtype=float))
    reference = max(p.data.n_rows for p in pairs) if cfg.calibrate_rows else None
    return TiclModel(skeleton_models, ori, basis, cfg.skeleton_threshold, cfg.orientation_threshold,
                     cfg.subset_cap, cfg.sepset_alpha, cfg.z_scale, reference)


# ---------------------------------------------------------------------------
# Discovery


@dataclass(frozen=True)
class DiscoveryResult:
    graph: PDAG
    targets: dict[int, frozenset[int]]
    system_view: PDAG
    edge_probability: dict[tuple[int, int], float] = field(default_factory=dict)
    noncollider_probability: dict[tuple[int, int, int], float] = field(default_factory=dict)
    conflicts: int = 0

    def to_json(self, names: Sequence[str] | None = None) -> str:
        return json.dumps({
            "edges": self.graph.to_edge_list(names).splitlines(),
            "targets": {str(k): sorted(v) for k, v in self.targets.items()},
            "conflicts": self.conflicts,
        }, indent=1)


def detect_targets(graph: PDAG, system_count: int) -> dict[int, frozenset[int]]:
    k = graph.n - system_count
    out = {r: set() for r in range(1, k + 1)}
    for a, b in graph.directed:
        if a >= system_count and b < system_count:
            out[a - system_count + 1].add(b)
    return {r: frozenset(v) for r, v in out.items()}


def _fixed_env_edges(c: JciConstraints, known: Mapping[int, frozenset[int]]) -> tuple[list[set[int]], set]:
    adj = legal_skeleton(c)
    fixed = set()
    d = c.system_count
    for r in range(1, c.env_count + 1):
        e = d + r - 1
        for v in range(d):
            if v in known.get(r, ()):
                fixed.add((v, e))
            else:
                _remove(adj, v, e)
    return adj, fixed


def learn_skeleton(model: TiclModel, ci, c: JciConstraints, known: Mapping[int, frozenset[int]] | None = None):
    """Run the pruning cascade; returns (neighbour sets, sepsets of removed pairs, edge probabilities)."""
    if known is not None:
        adj, fixed = _fixed_env_edges(c, known)
    else:
        adj, fixed = legal_skeleton(c), set()
    conf = _initial_confidence(ci, adj)
    sepsets: dict[tuple[int, int], tuple[int, ...]] = {}
    probs_out: dict[tuple[int, int], float] = {}
    for k, clf in enumerate(model.skeleton_models):
        feats = _order_features(ci, adj, conf, k, model.basis, model.subset_cap, fixed)
        if not feats:
            break
        probs = clf.predict_proba(np.array([f.vector for f in feats]))
        for f, p in zip(feats, probs):
            i, j = f.pair
            conf[i, j] = conf[j, i] = p
            probs_out[(i, j)] = float(p)
            if p < model.skeleton_threshold:
                _remove(adj, i, j)
                sepsets[(i, j)] = f.sepset
    return adj, sepsets, probs_out


def discover(model: TiclModel, data: AugmentedDataset, known: Mapping[int, frozenset[int]] | None = None,
             ci=None) -> DiscoveryResult:
    """Predict the augmented equivalence-class graph and the intervention targets.

    ``ci`` overrides the G-squared tester (e.g. with an :class:`OracleCI`).
    ``known`` fixes the environment edges to the given targets before learning.
    """
    c = data.constraints
    d = c.system_count
    ci = ci if ci is not None else CITester(data.table, model.z_scale, model.reference_rows)
    adj, sepsets1, edge_probs = learn_skeleton(model, ci, c, known)

    directed: set[tuple[int, int]] = set()
    for e in range(d, c.n):
        for v in adj[e]:
            directed.add((e, v))

    triples = _candidate_triples(adj, c)
    feats = [orientation_features(ci, adj, _triple_sepsets(ci, adj, t, sepsets1, model.sepset_alpha,
                                                           model.k_max, model.subset_cap), t)
             for t in triples]
    p_noncollider = (model.orientation_model.predict_proba(np.array([f.vector for f in feats]))
                     if feats else np.array([]))
    noncollider_probs = {t: float(p) for t, p in zip(triples, p_noncollider)}
    conflicts = 0
    for idx in np.argsort(p_noncollider, kind="stable"):
        if p_noncollider[idx] >= model.orientation_threshold:
            break
        a, mid, b = triples[idx]
        if (mid, a) in directed or (mid, b) in directed:
            conflicts += 1
            continue
        trial = directed | {(a, mid), (b, mid)}
        if _has_directed_cycle(c.n, trial):
            conflicts += 1
            continue
        directed = trial
    undirected = {(i, j) for i in range(c.n) for j in adj[i]
                  if i < j and (i, j) not in directed and (j, i) not in directed}
    pattern = PDAG(c.n, frozenset(directed), frozenset(undirected))
    try:
        graph = meek_closure(pattern)
    except CycleError:  # pragma: no cover - cycles are filtered above
        graph = pattern
    if conflicts:
        log.info("skipped %d conflicting collider orientations", conflicts)
    return DiscoveryResult(graph, detect_targets(graph, d), graph.restrict(range(d)), edge_probs,
                           noncollider_probs, conflicts)
