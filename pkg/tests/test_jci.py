import numpy as np
import pytest

from ticl.bayesnet import DataTable, InterventionFamily
from ticl.jci import (
    AugmentedDataset,
    JciConstraints,
    augment_graph,
    edge_is_legal,
    family_from_manifest,
    pool,
    read_augmented,
    read_regime_manifest,
    split,
    targets_from_augmented,
    write_augmented,
    write_regime_manifest,
)


def table(rows, cards=(2, 3)):
    return DataTable(("a", "b"), np.array(rows), cards)


def test_observational_only_pool_is_the_table():
    t = table([[0, 1], [1, 2]])
    aug = pool([t], InterventionFamily.from_targets([]))
    assert aug.k == 0 and aug.table.columns == t.columns
    np.testing.assert_array_equal(aug.table.values, t.values)


def test_two_regimes_of_three_rows():
    obs = table([[0, 0], [1, 1], [0, 2]])
    intv = table([[1, 0], [1, 1], [1, 2]])
    aug = pool([obs, intv], InterventionFamily.from_targets([[0]]))
    assert aug.table.n_rows == 6
    np.testing.assert_array_equal(aug.table.values[:, 2], [0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(aug.regime_of_rows(), [0, 0, 0, 1, 1, 1])


def test_env_block_layout_and_split_round_trip():
    blocks = [table([[0, 0]] * 2), table([[1, 1]] * 3), table([[0, 2]] * 4)]
    aug = pool(blocks, InterventionFamily.from_targets([[0], [1]]))
    env = aug.table.values[:, 2:]
    np.testing.assert_array_equal(env.sum(axis=0), [3, 4])
    assert env.sum(axis=1).max() == 1
    back = split(aug)
    for a, b in zip(back, blocks):
        np.testing.assert_array_equal(a.values, b.values)


def test_pool_validates_inputs():
    with pytest.raises(ValueError):
        pool([table([[0, 0]])], InterventionFamily.from_targets([[0]]))
    other = DataTable(("a", "c"), np.array([[0, 0]]), (2, 3))
    with pytest.raises(ValueError):
        pool([table([[0, 0]]), other], InterventionFamily.from_targets([[0]]))


def test_augmented_dataset_rejects_multi_hot_rows():
    t = DataTable(("a", "e1", "e2"), np.array([[0, 1, 1]]), (2, 2, 2))
    with pytest.raises(ValueError):
        AugmentedDataset(t, 2, 1)


def test_augment_graph_identity_without_interventions():
    dag = np.array([[0, 1], [0, 0]], dtype=bool)
    np.testing.assert_array_equal(augment_graph(dag, InterventionFamily.from_targets([])), dag)


def test_augment_graph_fig2_family():
    dag = np.zeros((3, 3), dtype=bool)
    aug = augment_graph(dag, InterventionFamily.from_targets([[0], [1, 2]]))
    assert aug.shape == (5, 5)
    assert {tuple(e) for e in np.argwhere(aug)} == {(3, 0), (4, 1), (4, 2)}
    assert targets_from_augmented(aug, 3) == {1: frozenset({0}), 2: frozenset({1, 2})}


def test_augment_graph_rejects_unknown_target():
    with pytest.raises(ValueError):
        augment_graph(np.zeros((2, 2), dtype=bool), InterventionFamily.from_targets([[5]]))


def test_edge_legality():
    c = JciConstraints(3, 2)
    assert edge_is_legal(c, 0, 1)
    assert edge_is_legal(c, 3, 0)
    assert not edge_is_legal(c, 0, 3)
    assert not edge_is_legal(c, 3, 4)
    assert not edge_is_legal(c, 1, 1)
    mask = c.legal_mask()
    assert all(mask[i, j] == edge_is_legal(c, i, j) for i in range(5) for j in range(5))


def test_relaxed_constraints():
    c = JciConstraints(2, 2, allow_env_env=True, allow_sys_to_env=True)
    assert edge_is_legal(c, 2, 3) and edge_is_legal(c, 0, 2)


def test_manifest_round_trip(tmp_path):
    fam = InterventionFamily.from_targets([[1], [0, 2]], "hard")
    write_regime_manifest(fam, tmp_path / "r.json")
    assert family_from_manifest(tmp_path / "r.json") == fam
    k, known = read_regime_manifest(tmp_path / "r.json")
    assert k == 2 and known == {1: frozenset({1}), 2: frozenset({0, 2})}
    write_regime_manifest(fam, tmp_path / "u.json", known=False)
    assert read_regime_manifest(tmp_path / "u.json") == (2, None)


def test_augmented_dataset_round_trip(tmp_path):
    aug = pool([table([[0, 0], [1, 2]]), table([[1, 1]])], InterventionFamily.from_targets([[0]]))
    write_augmented(aug, tmp_path)
    back = read_augmented(tmp_path)
    assert (back.k, back.system_count) == (1, 2)
    np.testing.assert_array_equal(back.table.values, aug.table.values)
