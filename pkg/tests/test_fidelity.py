import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from radfid.fidelity import (CorrelationRecord, CorrelationTable, NetworkProfile, assign_groups,
                             average_ranks, band, correlate_cohorts, paired_t_test, spearman)
from radfid.tables import FeatureTable


def test_spearman_hand_value():
    # rank differences 1,1,1,1,0 -> 1 - 6*4/(5*24)
    assert spearman([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]).rho == pytest.approx(0.8, abs=1e-12)
    assert spearman([1, 2, 3], [3, 2, 1]).rho == -1.0


def test_spearman_constant_is_degenerate():
    r = spearman([1, 1, 1, 1], [1, 2, 3, 4])
    assert r.rho == 0 and r.degenerate


def test_spearman_errors():
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [1, 2])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2])


def test_average_ranks_ties():
    np.testing.assert_array_equal(average_ranks(np.array([10.0, 20, 20, 5])), [2, 3.5, 3.5, 1])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=4, max_size=30), st.integers(0, 2**31))
def test_spearman_agrees_with_scipy_and_is_rank_invariant(xs, seed):
    x = np.array(xs, float)
    y = np.random.default_rng(seed).integers(-3, 4, x.size).astype(float)
    r = spearman(x, y)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        assert r.degenerate
        return
    assert r.rho == pytest.approx(stats.spearmanr(x, y).statistic, abs=1e-9)
    assert spearman(y, x).rho == pytest.approx(r.rho, abs=1e-12)
    assert spearman(np.exp(x / 3), 2 * y + 7).rho == pytest.approx(r.rho, abs=1e-12)
    assert spearman(-x, y).rho == pytest.approx(-r.rho, abs=1e-12)


def test_paired_t_matches_scipy_and_antisymmetry():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=12), rng.normal(size=12) + 0.3
    t = paired_t_test(x, y)
    ref = stats.ttest_rel(x, y)
    assert t.t == pytest.approx(ref.statistic, rel=1e-10)
    assert t.p == pytest.approx(ref.pvalue, rel=1e-8)
    assert t.df == 11
    back = paired_t_test(y, x)
    assert back.t == pytest.approx(-t.t) and back.p == pytest.approx(t.p)


def test_paired_t_hand_value():
    # differences 1,2,3,4,5 with mean 3 and sd sqrt(2.5)
    t = paired_t_test([2, 4, 6, 8, 10], [1, 2, 3, 4, 5])
    assert t.t == pytest.approx(3 / math.sqrt(2.5 / 5), rel=1e-12)


def test_paired_t_conventions():
    same = paired_t_test([1, 2, 3], [1, 2, 3])
    assert same.t == 0 and same.p == 1 and same.zero_variance
    shift = paired_t_test([2, 3, 4], [1, 2, 3])
    assert shift.t == math.inf and shift.p == 0
    with pytest.raises(ValueError):
        paired_t_test([1], [2])


@pytest.mark.parametrize("r,b", [(0.0, "poor"), (0.4999, "poor"), (0.5, "moderate"),
                                 (0.745, "moderate"), (0.75, "good"), (0.8999, "good"),
                                 (0.9, "excellent"), (1.0, "excellent")])
def test_band_boundaries(r, b):
    assert band(r) == b


def test_band_rejects_out_of_range():
    with pytest.raises(ValueError):
        band(1.2)


def _table(case_ids, cols, seed=0):
    fids = sorted(cols)
    vals = np.column_stack([cols[f] for f in fids])
    return FeatureTable(list(case_ids), fids, vals)


def test_correlate_self_and_reordered():
    rng = np.random.default_rng(0)
    ids = [f"c{i}" for i in range(10)]
    ref = _table(ids, {"a": rng.random(10), "b": rng.random(10), "k": np.ones(10)})
    self_t = correlate_cohorts(ref, ref)
    rec = {r.feature_id: r for r in self_t}
    assert rec["a"].rho == 1 and rec["a"].band == "excellent" and rec["a"].p_value == 1
    assert rec["k"].degenerate and rec["k"].rho == 0
    shuffled = ref.reorder(ids[::-1])
    again = correlate_cohorts(ref, shuffled)
    assert [r.rho for r in again] == [r.rho for r in self_t]


def test_correlate_errors():
    ids = ["a", "b", "c"]
    ref = _table(ids, {"f": np.arange(3.0)})
    with pytest.raises(ValueError, match="case-set"):
        correlate_cohorts(ref, _table(["a", "b", "d"], {"f": np.arange(3.0)}))
    with pytest.raises(ValueError, match="unknown feature"):
        correlate_cohorts(ref, _table(ids, {"f": np.arange(3.0), "g": np.arange(3.0)}))


def _ctab(name, rhos):
    return CorrelationTable([CorrelationRecord(f, r, abs(r), 0.5, 10, band(abs(r)))
                             for f, r in rhos.items()], name)


def test_group_three_feature_example():
    tables = {"A": _ctab("A", {"f1": 0.9, "f2": 0.6, "f3": 0.3}),
              "B": _ctab("B", {"f1": 0.8, "f2": 0.2, "f3": -0.1})}
    profiles = [NetworkProfile("A", 0.86), NetworkProfile("B", 0.70)]
    g = assign_groups(tables, profiles, tau=0.5)
    assert g.groups == {"f1": "group1", "f2": "group2", "f3": "group3"}
    assert g.sizes() == {"group1": 1, "group2": 1, "group3": 1}
    assert g.summary["A"]["group1"] == (0.9, 0.0)
    # a low-performance network detecting alone still yields group1
    tables["B"] = _ctab("B", {"f1": 0.8, "f2": 0.2, "f3": -0.7})
    assert assign_groups(tables, profiles, 0.5).groups["f3"] == "group1"


def test_group_majority_rule():
    nets = ["a", "b", "c"]
    tables = {"a": _ctab("a", {"f": 0.9, "g": 0.9}), "b": _ctab("b", {"f": 0.9, "g": 0.1}),
              "c": _ctab("c", {"f": 0.1, "g": 0.1})}
    profiles = [NetworkProfile(n, 0.9) for n in nets]
    g = assign_groups(tables, profiles, 0.5, group1_rule="majority")
    assert g.groups == {"f": "group1", "g": "group2"}


def test_group1_shrinks_and_group3_grows_with_tau():
    rng = np.random.default_rng(3)
    fids = [f"f{i}" for i in range(40)]
    tables = {n: _ctab(n, dict(zip(fids, rng.uniform(-1, 1, 40)))) for n in ("a", "b")}
    profiles = [NetworkProfile("a", 0.9), NetworkProfile("b", 0.9)]
    prev = None
    for tau in (0.2, 0.4, 0.6, 0.8):
        s = assign_groups(tables, profiles, tau).sizes()
        if prev:
            assert s["group1"] <= prev["group1"] and s["group3"] >= prev["group3"]
        prev = s


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 0.9), st.floats(0.0, 0.09),
       st.sampled_from(["any_low", "majority"]))
def test_groups_partition_and_group3_never_shrinks(seed, tau, step, rule):
    rng = np.random.default_rng(seed)
    fids = [f"f{i}" for i in range(25)]
    nets = ["a", "b", "c"]
    tables = {n: _ctab(n, dict(zip(fids, rng.uniform(-1, 1, 25)))) for n in nets}
    profiles = [NetworkProfile(n, s) for n, s in zip(nets, rng.uniform(0.5, 1.0, 3))]
    low = assign_groups(tables, profiles, tau, rule)
    high = assign_groups(tables, profiles, tau + step, rule)
    assert set(low.groups) == set(fids) and sum(low.sizes().values()) == len(fids)
    for f in fids:
        if low.groups[f] == "group3":
            assert high.groups[f] == "group3"


def test_group_errors():
    t = {"a": _ctab("a", {"f": 0.9})}
    with pytest.raises(ValueError):
        assign_groups(t, [])
    with pytest.raises(ValueError):
        assign_groups(t, [NetworkProfile("a", 0.9)], tau=1.0)
    with pytest.raises(ValueError, match="no correlation table"):
        assign_groups(t, [NetworkProfile("z", 0.9)])
