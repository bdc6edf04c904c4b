"""Evaluation metrics for equivalence-class graphs and intervention targets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .bayesnet import InterventionFamily
from .citest import OracleCI
from .graphlib import PDAG, consistent_extension, descendants


@dataclass(frozen=True)
class EdgeOutcomeCounts:
    """Per-pair outcome cells; ``True``/``pred`` columns of the SHD cell table.

    ``directed_right``: identifiable edge predicted with the right direction.
    ``directed_wrong``: identifiable edge predicted reversed.
    ``undirected_on_identifiable``: identifiable edge predicted undirected.
    ``missing_identifiable``: identifiable edge absent from the prediction.
    ``directed_on_unidentifiable``: undirected true edge predicted directed.
    ``undirected_right``: undirected true edge predicted undirected.
    ``missing_unidentifiable``: undirected true edge absent from the prediction.
    ``spurious_directed`` / ``spurious_undirected``: predicted edge between non-adjacent nodes.
    """

    directed_right: int = 0
    directed_wrong: int = 0
    undirected_on_identifiable: int = 0
    missing_identifiable: int = 0
    directed_on_unidentifiable: int = 0
    undirected_right: int = 0
    missing_unidentifiable: int = 0
    spurious_directed: int = 0
    spurious_undirected: int = 0

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(asdict(self).values())

    @property
    def errors(self) -> int:
        return (self.directed_wrong + self.undirected_on_identifiable + self.missing_identifiable
                + self.directed_on_unidentifiable + self.missing_unidentifiable
                + self.spurious_directed + self.spurious_undirected)


def edge_outcomes(truth: PDAG, pred: PDAG) -> EdgeOutcomeCounts:
    if truth.n != pred.n:
        raise ValueError(f"node counts differ: {truth.n} vs {pred.n}")
    cells = dict.fromkeys(EdgeOutcomeCounts.__dataclass_fields__, 0)
    for a, b in truth.skeleton_pairs() | pred.skeleton_pairs():
        t, p = truth.edge_type(a, b), pred.edge_type(a, b)
        if t in ("->", "<-"):
            key = ("missing_identifiable" if not p else "undirected_on_identifiable" if p == "--"
                   else "directed_right" if p == t else "directed_wrong")
        elif t == "--":
            key = "missing_unidentifiable" if not p else "undirected_right" if p == "--" else "directed_on_unidentifiable"
        else:
            key = "spurious_undirected" if p == "--" else "spurious_directed"
        cells[key] += 1
    return EdgeOutcomeCounts(**cells)


def shd_icpdag(truth: PDAG, pred: PDAG) -> tuple[int, EdgeOutcomeCounts]:
    cells = edge_outcomes(truth, pred)
    return cells.errors, cells


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def f1_icpdag(truth: PDAG, pred: PDAG) -> tuple[float, float, float]:
    """Precision, recall and F1 over identifiable (directed) edges.

    precision = right / (right + wrong + undirected-on-identifiable + missing-identifiable);
    recall = right / (right + wrong + directed-on-unidentifiable + spurious-directed).
    """
    c = edge_outcomes(truth, pred)
    precision = _ratio(c.directed_right, c.directed_right + c.directed_wrong
                       + c.undirected_on_identifiable + c.missing_identifiable)
    recall = _ratio(c.directed_right, c.directed_right + c.directed_wrong
                    + c.directed_on_unidentifiable + c.spurious_directed)
    return precision, recall, _f1(precision, recall)


def _valid_adjustment(truth: np.ndarray, i: int, j: int, z: set[int], oracle: OracleCI) -> bool:
    """Whether ``z`` identifies the effect of ``i`` on ``j`` by covariate adjustment."""
    de_i = descendants(truth, i)
    # nodes other than i on directed paths from i to j
    on_path = {w for w in de_i if w == j or j in descendants(truth, w)} if j in de_i else set()
    forbidden = set()
    for w in on_path:
        forbidden |= {w} | descendants(truth, w)
    if z & forbidden:
        return False
    if not on_path:
        return oracle.independent(i, j, z)
    cut = truth.copy()
    for w in on_path:
        cut[i, w] = False
    return OracleCI(cut).independent(i, j, z)


def sid_dag(truth: np.ndarray, pred: np.ndarray) -> int:
    """Structural intervention distance between two DAGs (prediction adjusts with its parent sets)."""
    truth = np.asarray(truth, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    n = truth.shape[0]
    if pred.shape != truth.shape:
        raise ValueError("graphs differ in size")
    oracle = OracleCI(truth)
    wrong = 0
    for i in range(n):
        pa = set(np.flatnonzero(pred[:, i]).tolist())
        de_i = descendants(truth, i)
        for j in range(n):
            if i == j:
                continue
            if j in pa:
                ok = j not in de_i
            else:
                ok = _valid_adjustment(truth, i, j, pa, oracle)
            wrong += not ok
    return wrong


def sid(truth_dag: np.ndarray, pred: PDAG | np.ndarray) -> int:
    """SID against a DAG or, for a partially directed prediction, its lowest-index consistent extension."""
    ext = consistent_extension(pred) if isinstance(pred, PDAG) else pred
    return sid_dag(truth_dag, ext)


def f1_targets(truth: InterventionFamily, predicted: Mapping[int, frozenset[int] | set[int]]) -> tuple[float, float, float]:
    """Precision = correct / predicted, recall = correct / true, over (regime, target) edges."""
    if predicted and max(predicted) > truth.k:
        raise ValueError("prediction has more regimes than the family")
    true_edges = {(r, t) for r, ts in enumerate(truth.target_sets, start=1) for t in ts}
    pred_edges = {(r, t) for r, ts in predicted.items() for t in ts}
    hit = len(true_edges & pred_edges)
    precision = _ratio(hit, len(pred_edges))
    recall = _ratio(hit, len(true_edges))
    return precision, recall, _f1(precision, recall)


def evaluation_report(truth_graph: PDAG, pred_graph: PDAG, truth_dag: np.ndarray,
                      truth_fam: InterventionFamily | None = None,
                      predicted_targets: Mapping[int, frozenset[int]] | None = None) -> dict:
    shd, cells = shd_icpdag(truth_graph, pred_graph)
    precision, recall, f1 = f1_icpdag(truth_graph, pred_graph)
    report = {"shd": shd, "f1": f1, "precision": precision, "recall": recall,
              "breakdown": asdict(cells)}
    try:
        report["sid"] = sid(truth_dag, pred_graph)
    except ValueError:
        report["sid"] = None
    if truth_fam is not None and predicted_targets is not None:
        tp, tr, tf = f1_targets(truth_fam, predicted_targets)
        report.update(target_precision=tp, target_recall=tr, target_f1=tf)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True)
