import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dkfis.errors import UndefinedMetric
from dkfis.metrics import ConfusionCounts, confusion_counts, g_metric_means, regression_metrics


def test_g_metric_examples():
    assert g_metric_means(ConfusionCounts(tp=5, fp=0, tn=7, fn=0)) == 1.0
    assert g_metric_means(ConfusionCounts(tp=8, fp=1, tn=9, fn=2)) == pytest.approx(
        0.848528137423857, abs=1e-12)
    assert g_metric_means(ConfusionCounts(tp=3, fp=97, tn=0, fn=0)) == 0.0
    with pytest.raises(UndefinedMetric):
        g_metric_means(ConfusionCounts(tp=0, fp=1, tn=2, fn=0))


def test_confusion_counts():
    c = confusion_counts([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert c.to_dict() == {"tp": 2, "fp": 1, "tn": 1, "fn": 1}


@given(st.integers(0, 50), st.integers(0, 50), st.integers(1, 50), st.integers(1, 50))
def test_g_symmetric_under_class_swap(tp, fp, tn, fn):
    a = g_metric_means(ConfusionCounts(tp, fp, tn, fn)) if tp + fn and tn + fp else None
    b = g_metric_means(ConfusionCounts(tn, fn, tp, fp)) if tp + fn and tn + fp else None
    assert a == pytest.approx(b)


def test_regression_perfect_and_shift():
    o = np.array([0.1, 0.3, 0.5, 0.2])
    m = regression_metrics(o, o)
    assert (m.cc, m.rmse, m.aem, m.si) == (1.0, 0.0, 0.0, 0.0)
    m = regression_metrics(o + 0.05, o)
    assert m.cc == pytest.approx(1.0) and m.aem == pytest.approx(0.05) and m.rmse == pytest.approx(0.05)


def test_two_point_example():
    with pytest.raises(UndefinedMetric) as exc:
        regression_metrics([0.3, 0.3], [0.2, 0.4])
    assert exc.value.which == "cc"
    p = exc.value.partial
    assert p["rmse"] == pytest.approx(0.1, abs=1e-15)
    assert p["aem"] == pytest.approx(0.1, abs=1e-15)
    assert p["si"] == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_cc_hand_value():
    # pred (1,2,3), obs (1,3,2): covariance sum 1, both variance sums 2 -> cc 0.5
    assert regression_metrics([1.0, 2.0, 3.0], [1.0, 3.0, 2.0]).cc == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=200)
@given(st.integers(0, 100_000))
def test_aem_le_rmse_and_order_independent(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    p, o = rng.uniform(0, 1, n), rng.uniform(0.01, 1, n)
    m = regression_metrics(p, o)
    assert m.aem <= m.rmse + 1e-15
    perm = rng.permutation(n)
    m2 = regression_metrics(p[perm], o[perm])
    for k in ("cc", "rmse", "aem", "si"):
        assert math.isclose(getattr(m, k), getattr(m2, k), rel_tol=1e-12, abs_tol=1e-15)
