import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from ticl.bayesnet import DataTable
from ticl.citest import (
    P_FLOOR,
    Z_MAX,
    CITester,
    OracleCI,
    contingency_csv,
    dep,
    g2_from_counts,
    g2_test,
    z_of_p,
)
from ticl.graphlib import d_separated, enumerate_dags

# frozen from scipy.stats.chi2_contingency(lambda_="log-likelihood", correction=False)
G2_30_10 = 20.929925750581912
# frozen from 200 bisection steps on scipy.special.erfc over [0, 10]
ERFCINV_001 = 1.8213863677184496


def two_columns(x, y, cards=(2, 2)):
    return DataTable(("x", "y"), np.column_stack([x, y]), cards)


def table_from_counts(counts):
    rows = [(a, b) for a in range(2) for b in range(2) for _ in range(counts[a][b])]
    return two_columns(*np.array(rows).T)


def test_g2_hand_table():
    g2, dof = g2_from_counts(np.array([[30.0, 10.0], [10.0, 30.0]]))
    assert g2 == pytest.approx(G2_30_10, rel=1e-12)
    assert dof == 1
    score = g2_test(table_from_counts([[30, 10], [10, 30]]), 0, 1)
    assert score.g2 == pytest.approx(G2_30_10, rel=1e-12)


def test_copy_is_strongly_dependent():
    x = np.random.default_rng(0).integers(0, 2, 1000)
    assert g2_test(two_columns(x, x), 0, 1).p_value < 1e-6


def _null_p_values(count, n, rng):
    return [g2_test(two_columns(rng.integers(0, 2, n), rng.integers(0, 2, n)), 0, 1).p_value
            for _ in range(count)]


def test_independent_pairs_rarely_rejected():
    # one sequential stream; a calibrated test meets this bound with probability ~0.92
    p = _null_p_values(100, 10_000, np.random.default_rng(0))
    assert sum(v > 0.01 for v in p) >= 98


def test_type_one_error_is_calibrated():
    p = np.array(_null_p_values(2000, 2000, np.random.default_rng(1)))
    rate = np.mean(p <= 0.01)
    assert abs(rate - 0.01) < 3 * np.sqrt(0.01 * 0.99 / len(p))


def test_copy_beats_independent_pair():
    wins = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 3, 500)
        data = DataTable(("x", "c", "n"), np.column_stack([x, x, rng.integers(0, 3, 500)]), (3, 3, 3))
        wins += dep(data, 0, 1) > dep(data, 0, 2)
    assert wins >= 99


def test_z_examples():
    assert z_of_p(1.0) == 0.0
    assert z_of_p(0.01) == pytest.approx(ERFCINV_001, rel=1e-10)
    assert z_of_p(erfc(2.0)) == pytest.approx(2.0, rel=1e-10)


def test_z_floor_and_alternate_scale():
    assert z_of_p(0.0) == z_of_p(P_FLOOR) == Z_MAX
    assert 26 < Z_MAX < 26.5
    assert z_of_p(0.01, "normal-two-sided") == pytest.approx(ERFCINV_001 * np.sqrt(2), rel=1e-12)
    with pytest.raises(ValueError):
        z_of_p(0.5, "nope")


@given(st.floats(1e-300, 1.0), st.floats(1e-300, 1.0))
def test_z_is_monotone(p1, p2):
    if p1 < p2:
        assert z_of_p(p1) >= z_of_p(p2)


def test_constant_column_has_no_dof():
    data = two_columns(np.zeros(50, dtype=int), np.arange(50) % 2)
    score = g2_test(data, 0, 1)
    assert (score.dof, score.p_value, score.z) == (0, 1.0, 0.0)


def test_empty_strata_reduce_dof():
    # conditioning variable with three levels, only two observed
    rng = np.random.default_rng(0)
    z = rng.integers(0, 2, 400)
    data = DataTable(("x", "y", "z"), np.column_stack([rng.integers(0, 2, 400), rng.integers(0, 2, 400), z]),
                     (2, 2, 3))
    assert g2_test(data, 0, 1, [2]).dof == 2


def test_stratified_g2_sums_strata():
    rng = np.random.default_rng(4)
    data = DataTable(("x", "y", "z"), rng.integers(0, 3, (300, 3)), (3, 3, 3))
    total = 0.0
    for level in range(3):
        rows = data.values[data.values[:, 2] == level]
        total += g2_test(DataTable(("x", "y"), rows[:, :2], (3, 3)), 0, 1).g2
    assert g2_test(data, 0, 1, [2]).g2 == pytest.approx(total, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_symmetric_and_deterministic(seed):
    rng = np.random.default_rng(seed)
    data = DataTable(("a", "b", "c", "d"), rng.integers(0, 3, (200, 4)), (3, 3, 3, 3))
    assert g2_test(data, 0, 1, [2, 3]) == g2_test(data, 1, 0, [3, 2])
    assert g2_test(data, 0, 1, [2]) == g2_test(data, 0, 1, [2])


def test_invalid_arguments():
    data = two_columns([0, 1], [1, 0])
    with pytest.raises(ValueError):
        g2_test(data, 0, 0)
    with pytest.raises(ValueError):
        CITester(data).score(0, 1, [1])


def test_tester_caches_symmetric_queries():
    rng = np.random.default_rng(1)
    data = DataTable(("a", "b", "c"), rng.integers(0, 2, (100, 3)), (2, 2, 2))
    ci = CITester(data)
    assert ci.dep(0, 1, [2]) == ci.dep(1, 0, [2]) == dep(data, 0, 1, [2])
    assert ci.n_tests == 1


def test_reference_rows_rescale_statistic():
    data = table_from_counts([[300, 100], [100, 300]])
    full = CITester(data).score(0, 1)
    scaled = CITester(data, reference_rows=80).score(0, 1)
    assert scaled.g2 == pytest.approx(full.g2 * 80 / 800)
    assert CITester(data, reference_rows=10_000).score(0, 1) == full


def test_cache_persistence(tmp_path):
    rng = np.random.default_rng(2)
    data = DataTable(("a", "b", "c"), rng.integers(0, 2, (100, 3)), (2, 2, 2))
    ci = CITester(data)
    ci.dep(0, 1, [2])
    ci.save_cache(tmp_path)
    fresh = CITester(data)
    assert fresh.load_cache(tmp_path) == 1
    assert fresh.dep(0, 1, [2]) == ci.dep(0, 1, [2]) and fresh.n_tests == 0
    other = CITester(data, z_scale="normal-two-sided")
    assert other.load_cache(tmp_path) == 0


def test_oracle_agrees_with_d_separation():
    for g in enumerate_dags(4):
        oracle = OracleCI(g)
        for i in range(4):
            for j in range(i + 1, 4):
                rest = [v for v in range(4) if v not in (i, j)]
                for mask in range(1 << len(rest)):
                    cond = [rest[k] for k in range(len(rest)) if mask >> k & 1]
                    sep = d_separated(g, i, j, cond)
                    assert oracle.independent(i, j, cond) == sep
                    assert oracle.dep(i, j, cond) == (0.0 if sep else Z_MAX)


def test_contingency_dump():
    text = contingency_csv(table_from_counts([[3, 1], [0, 2]]), 0, 1)
    assert text.splitlines()[0].startswith("stratum")
