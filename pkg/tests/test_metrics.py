import numpy as np
import pytest

from oracles import interventional_sid, random_dag
from ticl.bayesnet import InterventionFamily
from ticl.graphlib import PDAG, cpdag_of
from ticl.metrics import (
    EdgeOutcomeCounts,
    edge_outcomes,
    evaluation_report,
    f1_icpdag,
    f1_targets,
    report_json,
    shd_icpdag,
    sid,
    sid_dag,
)

ARROW = PDAG(2, frozenset({(0, 1)}))
LINE = PDAG(2, undirected=frozenset({(0, 1)}))
EMPTY = PDAG(2)


def test_identical_graphs_score_perfectly():
    g = cpdag_of(random_dag(6, np.random.default_rng(0)) | np.eye(6, k=1, dtype=bool))
    assert shd_icpdag(g, g)[0] == 0
    assert f1_icpdag(g, g)[2] == 1.0


def test_directed_truth_undirected_prediction():
    shd, cells = shd_icpdag(ARROW, LINE)
    assert shd == 1 and cells.undirected_on_identifiable == 1


def test_spurious_directed_edge():
    shd, cells = shd_icpdag(EMPTY, ARROW)
    assert shd == 1 and cells == EdgeOutcomeCounts(spurious_directed=1)


def test_every_cell_reached_once():
    truth = PDAG(9, frozenset({(0, 1), (1, 2), (3, 2), (2, 4)}), frozenset({(5, 6), (6, 7), (7, 8)}))
    pred = PDAG(9, frozenset({(0, 1), (2, 1), (5, 6), (0, 8)}), frozenset({(3, 2), (6, 7), (4, 5)}))
    cells = edge_outcomes(truth, pred)
    assert cells.as_tuple() == (1, 1, 1, 1, 1, 1, 1, 1, 1)
    assert shd_icpdag(truth, pred)[0] == 7


def test_shd_symmetric_on_shared_skeleton():
    rng = np.random.default_rng(3)
    for _ in range(30):
        g = random_dag(5, rng)
        a, b = cpdag_of(g), PDAG.from_dag(g)
        assert shd_icpdag(a, b)[0] == shd_icpdag(b, a)[0]


def test_f1_conventions():
    assert f1_icpdag(LINE, LINE) == (0.0, 0.0, 0.0)
    assert f1_icpdag(ARROW, ARROW) == (1.0, 1.0, 1.0)
    assert f1_icpdag(ARROW, PDAG(2, frozenset({(1, 0)})))[2] == 0.0


def test_node_count_mismatch():
    with pytest.raises(ValueError):
        shd_icpdag(EMPTY, PDAG(3))


def test_sid_examples():
    a = np.array([[0, 1], [0, 0]], dtype=bool)
    assert sid(a, a) == 0
    assert sid(a, a.T) == 2
    assert sid(a, PDAG.from_dag(a)) == 0


def test_sid_matches_interventional_oracle():
    rng = np.random.default_rng(8)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        truth, pred = random_dag(n, rng), random_dag(n, rng)
        assert sid_dag(truth, pred) == interventional_sid(truth, pred, rng)


def test_target_f1_examples():
    fam = InterventionFamily.from_targets([[1]])
    assert f1_targets(fam, {1: {1}}) == (1.0, 1.0, 1.0)
    assert f1_targets(fam, {1: set()})[1:] == (0.0, 0.0)
    p, r, f = f1_targets(fam, {1: {1, 2}})
    assert (p, r) == (0.5, 1.0) and f == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        f1_targets(fam, {2: {0}})


def test_report_round_trip():
    truth = np.array([[0, 0, 1], [0, 0, 1], [0, 0, 0]], dtype=bool)
    fam = InterventionFamily.from_targets([[2]])
    rep = evaluation_report(cpdag_of(truth), cpdag_of(truth), truth, fam, {1: frozenset({2})})
    assert rep["shd"] == 0 and rep["sid"] == 0 and rep["target_f1"] == 1.0
    assert '"shd": 0' in report_json(rep)


def test_report_without_extension_has_null_sid():
    cycle4 = PDAG(4, undirected=frozenset({(0, 1), (1, 2), (2, 3), (0, 3)}))
    rep = evaluation_report(cycle4, cycle4, np.zeros((4, 4), dtype=bool))
    assert rep["sid"] is None
