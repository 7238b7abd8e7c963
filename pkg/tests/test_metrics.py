import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metric_oracle import oracle_macro_f1, oracle_top_k, random_instance
from mmhar.evaluation import MetricsReport, macro_f1, metrics_from_logits, per_class_recall, predictions, top_k_accuracy


def test_hand_derived_macro_f1():
    # class 0: P=1/2, R=1 -> 2/3; class 1: P=1, R=1/2 -> 2/3
    assert macro_f1([0, 0, 1], [0, 1, 1], 2) == pytest.approx(2 / 3, abs=0)


def test_perfect_and_absent_classes():
    assert macro_f1([0, 1, 2], [0, 1, 2], 3) == 1.0
    # class 2 never appears: it contributes 0 to the unweighted mean
    assert macro_f1([0, 1], [0, 1], 3) == pytest.approx(2 / 3)


def test_top_k_by_hand():
    logits = np.array([[0.1, 0.5, 0.4], [0.9, 0.05, 0.05], [0.2, 0.3, 0.5]])
    labels = np.array([2, 0, 0])
    assert top_k_accuracy(logits, labels, 1) == pytest.approx(1 / 3)
    assert top_k_accuracy(logits, labels, 2) == pytest.approx(2 / 3)
    assert top_k_accuracy(logits, labels, 3) == 1.0


def test_ties_go_to_smaller_index():
    logits = np.zeros((2, 4))
    assert predictions(logits).tolist() == [0, 0]
    assert top_k_accuracy(logits, [0, 1], 1) == 0.5
    assert top_k_accuracy(logits, [3, 3], 3) == 0.0


def test_top_k_rejects_bad_k():
    with pytest.raises(ValueError):
        top_k_accuracy(np.zeros((1, 3)), [0], 4)


@given(seed=st.integers(0, 2**32 - 1))
def test_metrics_match_brute_force(seed):
    logits, labels, c = random_instance(np.random.default_rng(seed))
    for k in range(1, c + 1):
        assert top_k_accuracy(logits, labels, k) == oracle_top_k(logits, labels, k)
    preds = predictions(logits)
    assert macro_f1(preds, labels, c) == oracle_macro_f1(preds.tolist(), labels.tolist(), c)


@given(seed=st.integers(0, 2**32 - 1))
def test_top_k_monotone_in_k(seed):
    logits, labels, c = random_instance(np.random.default_rng(seed))
    accs = [top_k_accuracy(logits, labels, k) for k in range(1, c + 1)]
    assert accs == sorted(accs) and accs[-1] == 1.0


def test_report_uses_min_five_classes_and_recall():
    logits = np.eye(3)[[0, 1, 1]]
    report = metrics_from_logits(logits, np.array([0, 1, 2]), 3)
    assert report.top5 == 1.0
    assert report.per_class_recall == [1.0, 1.0, 0.0]
    assert math.isnan(per_class_recall([0], [0], 2)[1])


def test_report_validation():
    with pytest.raises(ValueError):
        MetricsReport(top1=0.6, top5=0.5, macro_f1=0.1, num_samples=1)
    with pytest.raises(ValueError):
        MetricsReport(top1=1.2, top5=1.2, macro_f1=0.1, num_samples=1)
