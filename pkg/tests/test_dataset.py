import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qostree.dataset import (
    DataError, QwsSchema, class_distribution, load_csv, load_dataset, parse_csv, stratified_folds,
    to_csv, write_csv, write_metadata,
)
from qostree.synth import qws364

from conftest import make_dataset


def test_qws_sample_has_364_instances(qws):
    assert len(qws) == 364
    assert qws.total_weight == 364
    assert [a.name for a in qws.features][:3] == ["ResponseTime", "Availability", "Throughput"]
    assert qws.features[0].unit == "ms"


def test_header_only_file_is_rejected(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("A,B,Class\n")
    with pytest.raises(DataError, match="no instances"):
        load_csv(path)


def test_empty_file_is_rejected(tmp_path):
    path = tmp_path / "e.csv"
    path.write_text("")
    with pytest.raises(DataError, match="empty file"):
        load_csv(path)


def test_short_row_error_names_the_row():
    header = ",".join(f"p{i}" for i in range(9)) + ",Class"
    good = ",".join(["1"] * 9) + ",x"
    bad = ",".join(["1"] * 7) + ",x"
    with pytest.raises(DataError, match=r"row 2\b"):
        parse_csv("\n".join([header, good, bad, good]) + "\n")


def test_non_numeric_qws_cell_is_rejected(qws):
    text = to_csv(qws).splitlines()
    cells = text[5].split(",")
    cells[0] = "fast"
    text[5] = ",".join(cells)
    with pytest.raises(DataError, match=r"row 5 .*ResponseTime"):
        parse_csv("\n".join(text), schema=QwsSchema())


def test_missing_class_cell_is_rejected():
    with pytest.raises(DataError, match="missing class"):
        parse_csv("a,Class\n1,x\n2,?\n")


def test_missing_marker_and_label_order():
    d = parse_csv("a,b,Class\n1,?,zeta\n?,u,alpha\n3,v,zeta\n")
    assert math.isnan(d.data[0, 1]) and math.isnan(d.data[1, 0])
    assert d.class_labels == ("zeta", "alpha")
    assert d.attributes[1].values == ("u", "v")
    assert not d.class_order_declared


def test_explicit_class_order_is_declared():
    d = parse_csv("a,Class\n1,lo\n2,hi\n", class_labels=["hi", "lo"])
    assert d.class_labels == ("hi", "lo")
    assert list(d.y) == [1, 0]
    assert d.class_order_declared


def test_class_column_by_name():
    d = parse_csv("Class,a\nx,1\ny,2\n", class_name="Class")
    assert d.class_attribute.name == "Class"
    assert [a.name for a in d.features] == ["a"]


def test_csv_round_trip(tmp_path, qws, toy):
    for d in (qws, toy):
        path = tmp_path / f"{d.name}.csv"
        write_csv(d, path)
        write_metadata(d, path, seed=1)
        back = load_dataset(path)
        assert back == d
        assert back.class_order_declared
        assert back.fingerprint() == d.fingerprint()


def test_class_distribution_majority(qws):
    dist = class_distribution(qws)
    assert dist.total == 364
    assert max(dist.probabilities) == pytest.approx(120 / 364)
    assert max(dist.probabilities) == pytest.approx(0.32967, abs=5e-6)


def test_class_distribution_fractional_weights():
    d = make_dataset([[1, 2, 3]], ["A", "A", "B"], weights=[0.5, 0.5, 1.0])
    assert np.allclose(class_distribution(d).probabilities, [0.5, 0.5])


def test_single_class_distribution():
    d = make_dataset([[1, 2]], ["A", "A"], class_values=["A", "B"])
    assert np.allclose(class_distribution(d).probabilities, [1.0, 0.0])


def test_stratified_folds_counting_example():
    labels = ["A"] * 120 + ["B"] * 124 + ["C"] * 120
    d = make_dataset([list(range(364))], labels)
    f = stratified_folds(d, 10, 1)
    for fold in range(10):
        members = d.y[f.folds == fold]
        counts = np.bincount(members, minlength=3)
        assert counts[0] == 12 and counts[2] == 12 and counts[1] in (12, 13)


def test_leave_one_out_partition():
    d = make_dataset([[1, 2, 3, 4, 5]], ["A", "B", "A", "B", "A"])
    f = stratified_folds(d, 5, 3)
    assert sorted(np.bincount(f.folds)) == [1] * 5


def test_fold_errors():
    d = make_dataset([[1, 2, 3]], ["A", "B", "A"])
    with pytest.raises(DataError):
        stratified_folds(d, 1)
    with pytest.raises(DataError):
        stratified_folds(d, 4)


def test_folds_are_deterministic(qws):
    assert stratified_folds(qws, 10, 7) == stratified_folds(qws, 10, 7)
    assert stratified_folds(qws, 10, 7) != stratified_folds(qws, 10, 8)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=60), st.integers(2, 12), st.integers(0, 10_000))
def test_stratification_property(labels, k, seed):
    if k > len(labels):
        k = len(labels)
    d = make_dataset([list(range(len(labels)))], [f"c{v}" for v in labels],
                     class_values=[f"c{i}" for i in range(4)])
    f = stratified_folds(d, k, seed)
    assert sorted(np.concatenate([f.test_indices(i) for i in range(k)]).tolist()) == list(range(len(d)))
    for c in range(d.num_classes):
        per_fold = np.bincount(f.folds[d.y == c], minlength=k)
        assert per_fold.max() - per_fold.min() <= 1


def test_project_keeps_class(qws):
    p = qws.project(["Latency", "Availability"])
    assert [a.name for a in p.features] == ["Availability", "Latency"]
    assert p.class_labels == qws.class_labels
    with pytest.raises(DataError):
        qws.project(["Nope"])


def test_synth_majority_and_determinism():
    a, b = qws364(3), qws364(3)
    assert a == b
    assert np.bincount(a.y).max() == 120
    assert a.class_labels == ("Platinum", "Gold", "Silver", "Bronze")
