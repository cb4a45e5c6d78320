import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from daac.errors import DimensionError
from daac.metrics import ari, contingency, nmi, purity, score_all
from metric_oracles import brute_ari, brute_nmi, brute_purity, set_partitions

BELL = [1, 1, 2, 5, 15, 52, 203]

labels = st.lists(st.integers(0, 4), min_size=1, max_size=20)


def test_partition_enumerator_counts():
    assert [sum(1 for _ in set_partitions(n)) for n in range(7)] == BELL


def test_contingency_layout():
    t = contingency(["b", "a", "a"], [1, 1, 2])
    assert t.pred_labels == ("a", "b") and t.truth_labels == (1, 2)
    assert t.counts.tolist() == [[1, 1], [1, 0]]
    with pytest.raises(DimensionError):
        contingency([0], [0, 1])
    with pytest.raises(DimensionError):
        contingency([], [])


@given(st.data())
def test_metrics_match_brute_force(data):
    pred = data.draw(labels)
    truth = data.draw(st.lists(st.integers(0, 4), min_size=len(pred), max_size=len(pred)))
    s = score_all(pred, truth)
    assert s["nmi"] == pytest.approx(brute_nmi(pred, truth), abs=1e-12)
    assert s["ari"] == pytest.approx(brute_ari(pred, truth), abs=1e-12)
    assert s["purity"] == pytest.approx(brute_purity(pred, truth), abs=1e-12)


def test_analytic_cases():
    t = contingency([0, 0, 1, 1], ["A", "B", "A", "B"])
    # Hubert-Arabie: index 0, expected 2*2/6, max 2 -> (0 - 2/3) / (2 - 2/3) = -1/2
    assert ari(t) == pytest.approx(-0.5, abs=1e-15)
    assert brute_ari([0, 0, 1, 1], ["A", "B", "A", "B"]) == pytest.approx(-0.5, abs=1e-15)
    assert nmi(t) == 0.0
    same = contingency([3, 3, 1, 2], ["x", "x", "y", "z"])
    assert ari(same) == 1.0 and nmi(same) == pytest.approx(1.0) and purity(same) == 1.0
    single = contingency([0, 0], [5, 5])
    assert nmi(single) == 1.0 and ari(single) == 1.0


def test_nmi_normalizations_are_ordered():
    t = contingency([0, 0, 1, 1, 2, 2], [0, 0, 0, 1, 1, 1])
    vals = {m: nmi(t, m) for m in ("sqrt", "min", "max", "mean")}
    assert vals["max"] <= vals["sqrt"] <= vals["min"]
    assert vals["max"] <= vals["mean"] <= vals["min"]
    with pytest.raises(ValueError):
        nmi(t, "geometric")


@given(st.data())
def test_metric_symmetries(data):
    pred = data.draw(labels)
    truth = data.draw(st.lists(st.integers(0, 4), min_size=len(pred), max_size=len(pred)))
    a, b = score_all(pred, truth), score_all(truth, pred)
    assert a["nmi"] == pytest.approx(b["nmi"], abs=1e-12)
    assert a["ari"] == pytest.approx(b["ari"], abs=1e-12)
    relabeled = [{0: 7, 1: 3, 2: 9, 3: 1, 4: 0}[p] for p in pred]
    assert score_all(relabeled, truth) == pytest.approx(a, abs=1e-12)
    assert 0.0 <= a["nmi"] <= 1.0 and 0.0 < a["purity"] <= 1.0


def test_single_item():
    assert score_all([0], [1]) == {"nmi": 1.0, "ari": 1.0, "purity": 1.0}
