"""Metrics tests: confusion/report/top-k arithmetic oracles, Fleiss'
kappa longhand and Monte-Carlo checks, match-rate hand tables."""

import math

import numpy as np
import pytest

from vdpkit.errors import InvalidLabel, ShapeMismatch
from vdpkit.metrics import (
    NONE_LABEL,
    RatingTable,
    class_report,
    confusion,
    fleiss_details,
    fleiss_kappa,
    match_rates,
    normalize_columns,
    oracle_accuracy,
    topk_accuracy,
)


# ---------------------------------------------------------------------------
# confusion


def test_confusion_perfect_is_identity():
    labels = ("a", "b", "c")
    seq = ["a", "b", "c", "b", "a", "c", "c"]
    cm = confusion(seq, seq, labels=labels)
    assert cm.total == len(seq)
    norm = normalize_columns(cm)
    assert np.allclose(norm.matrix, np.eye(3))
    assert norm.empty_actuals == ()


def test_confusion_all_one_prediction():
    labels = ("a", "b")
    preds = ["a"] * 6
    actuals = ["a", "a", "b", "b", "b", "a"]
    norm = normalize_columns(confusion(preds, actuals, labels=labels))
    assert np.allclose(norm.matrix[0], [1.0, 1.0])
    assert np.allclose(norm.matrix[1], [0.0, 0.0])


def test_confusion_hand_table():
    # 3 classes; tally written out per (predicted, actual) pair
    preds = ["a", "a", "b", "b", "b", "c", "a", "c", "c", "b"]
    actuals = ["a", "b", "b", "b", "a", "c", "a", "c", "b", "c"]
    cm = confusion(preds, actuals, labels=("a", "b", "c"))
    expect = np.array(
        [
            [2, 1, 0],  # predicted a: 2 of actual a, 1 of actual b
            [1, 2, 1],
            [0, 1, 2],
        ]
    )
    assert np.array_equal(cm.counts, expect)
    norm = normalize_columns(cm)
    assert np.allclose(norm.matrix[:, 0], [2 / 3, 1 / 3, 0])
    assert np.allclose(norm.matrix[:, 1], [1 / 4, 2 / 4, 1 / 4])
    # display transpose flips axes only
    assert np.array_equal(cm.display_counts(), expect.T)


def test_confusion_empty_actual_column_flagged():
    cm = confusion(["a", "b"], ["a", "a"], labels=("a", "b", "c"))
    norm = normalize_columns(cm)
    assert set(norm.empty_actuals) == {"b", "c"}
    assert np.all(norm.matrix[:, 1] == 0)
    # non-empty columns still sum to one
    assert norm.matrix[:, 0].sum() == pytest.approx(1.0, abs=1e-9)


def test_confusion_rejects_length_mismatch_and_unknown_label():
    with pytest.raises(ShapeMismatch):
        confusion(["a"], ["a", "b"])
    with pytest.raises(InvalidLabel):
        confusion(["z"], ["a"], labels=("a", "b"))


def test_normalized_columns_sum_property():
    rng = np.random.default_rng(90210)
    labels = tuple("abcde")
    for _ in range(25):
        n = int(rng.integers(5, 60))
        preds = [labels[i] for i in rng.integers(0, 5, size=n)]
        actuals = [labels[i] for i in rng.integers(0, 5, size=n)]
        norm = normalize_columns(confusion(preds, actuals, labels=labels))
        sums = norm.matrix.sum(axis=0)
        for j, label in enumerate(labels):
            if label in norm.empty_actuals:
                assert sums[j] == 0.0
            else:
                assert abs(sums[j] - 1.0) <= 1e-9


# ---------------------------------------------------------------------------
# class report


def test_class_report_identity():
    cm = confusion(["a", "b", "c"], ["a", "b", "c"], labels=("a", "b", "c"))
    rep = class_report(cm)
    assert rep.precision == (1.0, 1.0, 1.0)
    assert rep.recall == (1.0, 1.0, 1.0)
    assert rep.f1 == (1.0, 1.0, 1.0)
    assert rep.macro_f1 == 1.0
    assert rep.undefined == ()


def test_class_report_never_predicted_class():
    # class b never predicted: precision 0/0 flagged, recall plain 0
    cm = confusion(["a", "a"], ["a", "b"], labels=("a", "b"))
    rep = class_report(cm)
    assert rep.precision[1] == 0.0
    assert rep.recall[1] == 0.0
    assert "b/precision" in rep.undefined
    assert "b/f1" in rep.undefined
    assert "b/recall" not in rep.undefined


def test_class_report_hand_two_class():
    # [[8,2],[2,8]]: both classes P = R = F1 = 0.8
    preds = ["a"] * 10 + ["b"] * 10
    actuals = ["a"] * 8 + ["b"] * 2 + ["a"] * 2 + ["b"] * 8
    rep = class_report(confusion(preds, actuals, labels=("a", "b")))
    for i in range(2):
        assert rep.precision[i] == pytest.approx(0.8)
        assert rep.recall[i] == pytest.approx(0.8)
        assert rep.f1[i] == pytest.approx(0.8)
    assert rep.macro_precision == pytest.approx(0.8)
    d = rep.as_dict()
    assert d["per_class"]["a"]["f1"] == pytest.approx(0.8)


# ---------------------------------------------------------------------------
# top-k


def test_topk_constructed_rates():
    # 10 items: 7 exact at rank 1, 2 more at rank 2, 1 miss entirely
    ranked = [["a", "b", "c"]] * 7 + [["b", "a", "c"]] * 2 + [["b", "c", "a"]]
    actuals = ["a"] * 9 + ["z"]
    assert topk_accuracy(ranked, actuals, 1) == pytest.approx(0.7)
    assert topk_accuracy(ranked, actuals, 2) == pytest.approx(0.9)
    assert topk_accuracy(ranked, actuals, 3) == pytest.approx(0.9)


def test_topk_monotone_and_full_coverage():
    rng = np.random.default_rng(411)
    labels = list("abcdef")
    for _ in range(20):
        n = int(rng.integers(4, 40))
        ranked = []
        for _ in range(n):
            perm = list(rng.permutation(labels))
            ranked.append(perm)
        actuals = [labels[i] for i in rng.integers(0, len(labels), size=n)]
        prev = 0.0
        for k in range(1, len(labels) + 1):
            acc = topk_accuracy(ranked, actuals, k)
            assert acc >= prev
            prev = acc
        # every actual appears somewhere in a full permutation
        assert prev == 1.0


def test_topk_rejects_bad_k_and_mismatch():
    with pytest.raises(ValueError):
        topk_accuracy([["a"]], ["a"], 0)
    with pytest.raises(ShapeMismatch):
        topk_accuracy([["a"]], ["a", "b"], 1)


# ---------------------------------------------------------------------------
# rating tables


def test_rating_table_roundtrip(tmp_path):
    table = RatingTable()
    table.add("i1", "h1", ("color", "shape"), domain="SDV1")
    table.add("i1", "h2", (), domain="SDV1")
    table.add("i2", "h1", ("regular",), domain="SDV2")
    table.add("i2", "h2", ("flowing", "regular", "color"), domain="SDV2")
    path = tmp_path / "ratings.jsonl"
    table.to_jsonl(path)
    back = RatingTable.from_jsonl(path)
    assert back.raters == ("h1", "h2")
    assert back.items == ("i1", "i2")
    assert back.column("h2")["i2"] == ("flowing", "regular", "color")
    assert back.domain("i1") == "SDV1"


def test_rating_table_latest_wins_and_validation():
    table = RatingTable()
    table.add("i1", "h1", ("color",))
    table.add("i1", "h1", ("shape",))
    assert table.column("h1")["i1"] == ("shape",)
    with pytest.raises(InvalidLabel):
        table.add("i2", "h1", ("a", "a"))
    with pytest.raises(InvalidLabel):
        table.add("i2", "h1", ("a", "b", "c", "d"))


# ---------------------------------------------------------------------------
# Fleiss' kappa


def _table_from_grid(grid):
    """grid[item][rater] = ranks tuple."""
    table = RatingTable()
    for i, row in enumerate(grid):
        for r, ranks in enumerate(row):
            table.add(f"i{i}", f"r{r}", ranks)
    return table


def test_fleiss_perfect_agreement_is_one():
    grid = [[("color",)] * 3, [("shape",)] * 3, [("color",)] * 3]
    assert fleiss_kappa(_table_from_grid(grid)) == pytest.approx(1.0)


def test_fleiss_hand_worked_table():
    # 4 items, 3 raters, categories {A, B, C}:
    #   i0: A A B   i1: B B B   i2: A B C   i3: C C A
    # per-item agreement P_i = (sum n_j^2 - R) / (R (R - 1)):
    #   (5-3)/6, (9-3)/6, (3-3)/6, (5-3)/6 -> mean P = 5/12
    # category shares: A 4/12, B 5/12, C 3/12 -> Pe = 50/144
    # K = (5/12 - 50/144) / (1 - 50/144) = 5/47
    grid = [
        [("A",), ("A",), ("B",)],
        [("B",), ("B",), ("B",)],
        [("A",), ("B",), ("C",)],
        [("C",), ("C",), ("A",)],
    ]
    res = fleiss_details(_table_from_grid(grid))
    assert res.items_used == 4
    assert res.items_dropped == 0
    assert res.kappa == pytest.approx(5 / 47, abs=1e-9)


def test_fleiss_null_monte_carlo():
    # independent uniform ratings over 2 categories agree only by chance
    rng = np.random.default_rng(60321)
    table = RatingTable()
    cats = ("x", "y")
    for i in range(10000):
        for r in range(3):
            table.add(f"i{i:05d}", f"r{r}", (cats[int(rng.integers(2))],))
    assert abs(fleiss_kappa(table)) <= 0.05


def test_fleiss_none_is_its_own_category():
    # rater 2 always abstains; abstentions agree with each other only
    grid = [
        [("A",), ("A",), ()],
        [("A",), ("A",), ()],
    ]
    res = fleiss_details(_table_from_grid(grid))
    assert NONE_LABEL in res.categories
    assert res.items_used == 2
    # excluding the none category leaves no complete items
    res2 = fleiss_details(_table_from_grid(grid), include_none=False)
    assert res2.items_dropped == 2
    assert math.isnan(res2.kappa)


def test_fleiss_rank_two_drops_short_cells():
    grid = [
        [("A", "B"), ("C", "B"), ("A", "B")],
        [("A", "B"), ("C",), ("A", "B")],  # middle rater gave no rank 2
        [("B", "A"), ("B", "A"), ("B", "A")],
    ]
    res = fleiss_details(_table_from_grid(grid), rank=2)
    assert res.items_used == 2
    assert res.items_dropped == 1


def test_fleiss_degenerate_single_category():
    grid = [[("A",)] * 3, [("A",)] * 3]
    assert math.isnan(fleiss_kappa(_table_from_grid(grid)))


def test_fleiss_relabel_invariance():
    rng = np.random.default_rng(7141)
    cats = ["a", "b", "c", "d"]
    for _ in range(10):
        n = int(rng.integers(6, 30))
        grid = [
            [(cats[int(rng.integers(4))],) for _ in range(3)] for _ in range(n)
        ]
        base = fleiss_kappa(_table_from_grid(grid))
        perm = list(rng.permutation(cats))
        mapping = dict(zip(cats, perm))
        renamed = [
            [(mapping[cell[0]],) for cell in row] for row in grid
        ]
        swapped = fleiss_kappa(_table_from_grid(renamed))
        if math.isnan(base):
            assert math.isnan(swapped)
        else:
            assert swapped == pytest.approx(base, abs=1e-12)


def test_fleiss_requires_two_raters():
    table = RatingTable()
    table.add("i0", "solo", ("A",))
    with pytest.raises(ValueError):
        fleiss_kappa(table)


# ---------------------------------------------------------------------------
# match rates and oracle accuracy


def test_match_rates_identical_full_columns():
    col = {f"i{k}": ("a", "b", "c") for k in range(5)}
    rates = match_rates(col, dict(col))
    assert rates == match_rates(dict(col), col)
    assert (rates.rank1, rates.rank2, rates.rank3, rates.any_single) == (
        1.0,
        1.0,
        1.0,
        1.0,
    )


def test_match_rates_disjoint_and_empty():
    a = {"i0": ("a",), "i1": ("b", "c"), "i2": ()}
    b = {"i0": ("x",), "i1": ("y", "z"), "i2": ()}
    rates = match_rates(a, b)
    # empty cells never match, even against each other
    assert rates == match_rates(b, a)
    assert rates.any_single == 0.0
    assert rates.rank1 == 0.0


def test_match_rates_hand_table():
    # 4 items:
    #   i0 exact 2-rank match            -> rank1, rank2, any
    #   i1 rank-1 differs, rank 2 equal  -> rank2, any
    #   i2 sets overlap out of order     -> any only
    #   i3 no overlap
    a = {
        "i0": ("a", "b"),
        "i1": ("a", "b"),
        "i2": ("a", "b"),
        "i3": ("a",),
    }
    b = {
        "i0": ("a", "b"),
        "i1": ("c", "b"),
        "i2": ("b", "c"),
        "i3": ("d",),
    }
    rates = match_rates(a, b)
    assert rates.rank1 == pytest.approx(1 / 4)
    assert rates.rank2 == pytest.approx(2 / 4)
    assert rates.rank3 == 0.0
    assert rates.any_single == pytest.approx(3 / 4)


def test_match_rates_symmetry_random():
    rng = np.random.default_rng(3351)
    labels = list("pqrs")
    for _ in range(15):
        n = int(rng.integers(3, 25))
        cols = []
        for _ in range(2):
            col = {}
            for k in range(n):
                depth = int(rng.integers(0, 4))
                col[f"i{k}"] = tuple(
                    rng.permutation(labels)[:depth].tolist()
                )
            cols.append(col)
        assert match_rates(cols[0], cols[1]) == match_rates(cols[1], cols[0])


def test_match_rates_requires_same_items():
    with pytest.raises(ShapeMismatch):
        match_rates({"i0": ("a",)}, {"i1": ("a",)})


def test_oracle_accuracy_self_and_shifted():
    oracle = {f"i{k}": ("a", "b", "c") for k in range(6)}
    assert oracle_accuracy(oracle, oracle).overall.rank1 == 1.0
    # rater rank 1 always equals oracle rank 2
    rater = {k: ("b", "a", "c") for k in oracle}
    acc = oracle_accuracy(rater, oracle)
    assert acc.overall.rank1 == 0.0
    assert acc.overall.any_single == 1.0


def test_oracle_accuracy_by_domain():
    oracle = {"i0": ("a",), "i1": ("b",), "i2": ("a",), "i3": ("c",)}
    rater = {"i0": ("a",), "i1": ("a",), "i2": ("a",), "i3": ("c",)}
    domains = {"i0": "SDV1", "i1": "SDV1", "i2": "SDV2", "i3": "SDV2"}
    acc = oracle_accuracy(rater, oracle, domains=domains)
    assert acc.overall.rank1 == pytest.approx(3 / 4)
    assert acc.by_domain["SDV1"].rank1 == pytest.approx(1 / 2)
    assert acc.by_domain["SDV2"].rank1 == pytest.approx(1.0)
    d = acc.as_dict()
    assert d["by_domain"]["SDV1"]["rank1"] == pytest.approx(1 / 2)


def test_oracle_accuracy_requires_full_oracle():
    with pytest.raises(InvalidLabel):
        oracle_accuracy({"i0": ("a",)}, {"i0": ()})
    with pytest.raises(InvalidLabel):
        oracle_accuracy({"i0": ("a",)}, {})
    # oracle may cover extra items the rater never saw
    acc = oracle_accuracy({"i0": ("a",)}, {"i0": ("a",), "i9": ("b",)})
    assert acc.overall.rank1 == 1.0
