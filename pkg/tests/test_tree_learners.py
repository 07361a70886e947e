import numpy as np
import pytest

from qostree.evaluation import cross_validate
from qostree.models import dumps_model, loads_model
from qostree.tree_learners import (
    Node, TreeModel, TreeParams, induce, predict, prune_pessimistic, train_decision_stump, train_j48,
    train_random_forest, train_random_tree, train_reptree,
)

from conftest import make_dataset, random_dataset

XOR = make_dataset([["0", "0", "1", "1"], ["0", "1", "0", "1"]], ["n", "y", "y", "n"],
                   kinds=["nominal", "nominal"])


def train_acc(model, d):
    return float(np.mean(model.predict(d) == d.y))


def separable(n=300, seed=0):
    """Two numeric attributes; class decided by one threshold on each."""
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.uniform(0, 10, n)
    b = rng.uniform(0, 10, n)
    keep = (np.abs(a - 5) > 0.3) & (np.abs(b - 3) > 0.3)
    a, b = a[keep], b[keep]
    labels = ["hi" if x > 5 and y > 3 else "lo" for x, y in zip(a, b)]
    return make_dataset([list(a), list(b)], labels)


def contradiction_free(rng):
    d = random_dataset(rng, n_max=30, p_max=4, m_max=3)
    seen, rows = {}, []
    for i, x in enumerate(d.X):
        key = tuple(x)
        if seen.setdefault(key, d.y[i]) == d.y[i]:
            rows.append(i)
    return d.subset(rows)


def test_single_class_gives_single_leaf():
    d = make_dataset([[1, 2, 3]], ["A", "A", "A"], class_values=["A", "B"])
    m = induce(d)
    assert m.root.is_leaf and m.node_count == 1
    assert m.predict_labels(d) == ["A"] * 3


def test_class_equal_to_attribute_gives_depth_one():
    col = ["r", "g", "b", "r", "g", "b"]
    d = make_dataset([col, ["p", "q", "p", "q", "p", "q"]], col, kinds=["nominal", "nominal"])
    m = induce(d, TreeParams(min_instances_per_leaf=1))
    assert m.depth == 1 and m.root.attribute == 0 and len(m.root.children) == 3
    assert train_acc(m, d) == 1.0


def test_xor_needs_depth_two():
    m = induce(XOR, TreeParams(min_instances_per_leaf=1, allow_zero_gain=True))
    assert m.depth == 2 and m.leaf_count == 4
    assert train_acc(m, XOR) == 1.0
    assert all(np.max(n.dist) == 1.0 for n in _leaves(m.root))


def test_zero_gain_stops_by_default():
    assert induce(XOR, TreeParams(min_instances_per_leaf=1)).root.is_leaf


def _leaves(node):
    if node.is_leaf:
        yield node
    for c in node.children:
        yield from _leaves(c)


def test_stump_picks_the_determining_attribute():
    d = make_dataset([["a", "b", "a", "b", "a", "b"], ["u", "u", "v", "v", "u", "v"]],
                     ["x", "y", "x", "y", "x", "y"], kinds=["nominal", "nominal"])
    m = train_decision_stump(d)
    assert m.depth == 1 and m.root.attribute == 0
    assert train_acc(m, d) == 1.0


def test_stump_on_xor_falls_back_to_majority():
    m = train_decision_stump(XOR)
    assert m.root.is_leaf
    assert train_acc(m, XOR) == 0.5


def test_stump_depth_is_one_on_qws(qws):
    m = train_decision_stump(qws)
    assert m.depth == 1


def test_j48_fits_qws_in_sample(qws):
    unpruned = train_j48(qws, TreeParams(criterion="gain_ratio"))
    pruned = train_j48(qws)
    assert train_acc(unpruned, qws) == 1.0
    assert train_acc(pruned, qws) == 1.0
    assert pruned.node_count <= unpruned.node_count


def test_j48_cross_validation_accuracy(qws):
    assert cross_validate(qws, "j48").accuracy >= 99.0


def test_pruning_a_leaf_is_a_fixpoint():
    leaf = Node(np.array([3.0, 1.0]), np.array([0.75, 0.25]))
    prune_pessimistic(leaf, 0.25)
    assert leaf.is_leaf and leaf.counts.tolist() == [3.0, 1.0]


def test_reptree_pure_grow_set_gives_leaf():
    d = make_dataset([list(range(9))], ["A"] * 9, class_values=["A", "B"])
    m = train_reptree(d)
    assert m.root.is_leaf


def test_reptree_small_data_skips_pruning():
    d = make_dataset([[1, 2]], ["A", "B"])
    m = train_reptree(d)
    assert m.metadata["pruning_skipped"]


def test_reptree_noise_prunes(qws):
    rng = np.random.Generator(np.random.PCG64(3))
    y = qws.data[:, qws.class_index].copy()
    flip = rng.random(len(y)) < 0.10
    y[flip] = (y[flip] + rng.integers(1, 4, flip.sum())) % 4
    data = qws.data.copy()
    data[:, qws.class_index] = y
    noisy = type(qws)(qws.attributes, data, qws.class_index)
    pruned = train_reptree(noisy)
    assert pruned.node_count <= pruned.metadata["nodes_before_pruning"]
    unpruned_twin = train_reptree(noisy, TreeParams(pruning="none"))
    assert pruned.node_count <= unpruned_twin.node_count


def test_reptree_on_simple_separable_concept():
    assert cross_validate(separable(), "reptree").accuracy >= 99.0


def test_reptree_on_qws_regression_floor(qws):
    # Grow-set holdout costs a few instances on this four-class concept.
    assert cross_validate(qws, "reptree").accuracy >= 98.0


def test_random_tree_with_all_attributes_equals_induce(qws):
    p = TreeParams(random_k=len(qws.features), seed=9)
    a = train_random_tree(qws, p)
    b = induce(qws, TreeParams(seed=9))
    assert a.root.to_dict() == b.root.to_dict()


def test_random_tree_is_deterministic(qws):
    p = TreeParams(seed=4)
    assert train_random_tree(qws, p).root.to_dict() == train_random_tree(qws, p).root.to_dict()
    assert train_random_tree(qws, p).params["random_k"] == 4
    assert train_random_tree(qws, p).metadata["rng"] == "numpy.random.PCG64"


def test_random_tree_cross_validation(qws):
    assert cross_validate(qws, "random-tree").accuracy >= 95.0


@pytest.mark.parametrize("seed", [1, 2, 17])
def test_degenerate_forest_equals_random_tree(qws, seed):
    forest = train_random_forest(qws, TreeParams(forest_size=1, bagging=False, seed=seed))
    tree = train_random_tree(qws, TreeParams(seed=seed))
    assert np.array_equal(forest.predict_proba(qws), tree.predict_proba(qws))


def test_forest_is_mean_of_members(qws):
    forest = train_random_forest(qws, TreeParams(forest_size=5, seed=2))
    mean = np.mean([t.predict_proba(qws) for t in forest.members], axis=0)
    assert np.allclose(forest.predict_proba(qws), mean, atol=1e-12)
    assert [t.seed for t in forest.members] == [2, 3, 4, 5, 6]


def test_forest_cross_validation(qws):
    assert cross_validate(qws, "random-forest").accuracy >= 97.0


def test_missing_root_value_routes_fractionally():
    d = make_dataset([[1] * 7 + [2] * 7], ["A"] * 7 + ["B"] * 7)
    m = induce(d)
    assert m.root.threshold == 1.5
    assert np.allclose(predict(m, [np.nan]), [0.5, 0.5])
    assert np.allclose(predict(m, [1.0]), [1.0, 0.0])


def test_single_leaf_predicts_prior():
    d = make_dataset([[1, 1, 1, 1]], ["A", "B", "A", "A"])
    m = induce(d)
    assert np.allclose(predict(m, [5.0]), [0.75, 0.25])


def test_unpruned_trees_fit_contradiction_free_data():
    rng = np.random.Generator(np.random.PCG64(21))
    for _ in range(150):
        d = contradiction_free(rng)
        for crit in ("information_gain", "gain_ratio", "gini"):
            m = induce(d, TreeParams(criterion=crit, min_instances_per_leaf=1, allow_zero_gain=True))
            assert train_acc(m, d) == 1.0


def test_pruned_never_larger_than_unpruned():
    rng = np.random.Generator(np.random.PCG64(8))
    for _ in range(100):
        d = random_dataset(rng, n_max=40)
        for crit, pruning in (("gain_ratio", "confidence"), ("information_gain", "reduced_error")):
            pruned = induce(d, TreeParams(criterion=crit, pruning=pruning, seed=3))
            assert pruned.node_count <= pruned.metadata["nodes_before_pruning"]
            if pruning == "confidence":
                assert pruned.node_count <= induce(d, TreeParams(criterion=crit)).node_count


def test_predictions_sum_to_one_and_depth_bound():
    rng = np.random.Generator(np.random.PCG64(13))
    for _ in range(100):
        d = random_dataset(rng, nominal_share=1.0, missing=0.1)
        for crit in ("information_gain", "gain_ratio"):
            m = induce(d, TreeParams(criterion=crit, min_instances_per_leaf=1, allow_zero_gain=True))
            assert np.allclose(m.predict_proba(d).sum(axis=1), 1.0, atol=1e-9)
            assert m.depth <= len(d.features)


def test_serialization_round_trip(qws):
    for m in (train_j48(qws), train_random_forest(qws, TreeParams(forest_size=3))):
        back = loads_model(dumps_model(m))
        assert type(back) is type(m)
        assert np.array_equal(back.predict_proba(qws), m.predict_proba(qws))


def test_invalid_params_rejected(qws):
    with pytest.raises(ValueError):
        induce(qws, TreeParams(confidence=0.7))
    with pytest.raises(ValueError):
        train_random_tree(qws, TreeParams(random_k=0))
    with pytest.raises(ValueError):
        train_random_forest(qws, TreeParams(forest_size=0))


def test_render_lists_tests(qws):
    text = train_j48(qws).render()
    assert "Availability" in text and "Number of Leaves" in text
    assert isinstance(train_j48(qws), TreeModel)
