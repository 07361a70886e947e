"""Greedy top-down tree induction and the tree classifiers built on it.

One growing routine serves every learner here; they differ in split
criterion, attribute sampling, depth limit and pruning:

* DecisionStump: one split on the best information-gain attribute.
* J48: gain ratio over above-average-gain attributes, pessimistic pruning.
* REPTree: information gain, reduced-error pruning on a held-out third,
  then backfitting of leaf distributions on all training data.
* RandomTree: information gain over K attributes drawn at each node.
* RandomForest: bagged random trees whose distributions are averaged.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from .dataset import DataError, Dataset, stratified_folds
from .models import RNG_NAME, Model, normalize
from .split_criteria import TOL, boundary_thresholds, entropy_rows, gini_rows, spread_missing

CRITERIA = ("information_gain", "gain_ratio", "gini")
PRUNING = ("none", "reduced_error", "confidence")


@dataclass
class TreeParams:
    criterion: str = "information_gain"
    min_instances_per_leaf: float = 2.0
    pruning: str = "none"
    confidence: float = 0.25
    random_k: int | None = None
    forest_size: int = 10
    seed: int = 1
    bagging: bool = True
    allow_zero_gain: bool = False
    max_depth: int | None = None
    prune_folds: int = 3

    def validate(self, n_features: int) -> None:
        if self.criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.pruning not in PRUNING:
            raise ValueError(f"unknown pruning mode {self.pruning!r}")
        if not 0 < self.confidence <= 0.5:
            raise ValueError("confidence factor must lie in (0, 0.5]")
        if self.min_instances_per_leaf < 0:
            raise ValueError("min_instances_per_leaf must be non-negative")
        if self.random_k is not None and not 1 <= self.random_k <= max(n_features, 1):
            raise ValueError(f"random_k must lie in [1, {n_features}]")
        if self.forest_size < 1:
            raise ValueError("forest_size must be at least 1")
        if self.prune_folds < 2:
            raise ValueError("prune_folds must be at least 2")


def default_random_k(n_features: int) -> int:
    return int(math.floor(math.log2(n_features))) + 1 if n_features > 0 else 1


@dataclass(eq=False)
class Node:
    """Tree node. Leaves have ``attribute is None``.

    ``counts`` are the training class weights that reached the node; ``dist``
    is the distribution it predicts (the parent's for empty branches).
    """

    counts: np.ndarray
    dist: np.ndarray
    attribute: int | None = None
    kind: str | None = None
    threshold: float | None = None
    value: int | None = None
    children: list = field(default_factory=list)
    branch_weights: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None

    def make_leaf(self) -> None:
        self.attribute = self.kind = self.threshold = self.value = None
        self.children = []
        self.branch_weights = None
        if self.counts.sum() > 0:
            self.dist = normalize(self.counts)

    def branch_of(self, v: float) -> int | None:
        """Child index for a known value, or None for an unseen nominal label."""
        if self.kind == "numeric":
            return 0 if v <= self.threshold else 1
        if self.kind == "equals":
            return 0 if v == self.value else 1
        k = int(v)
        return k if 0 <= k < len(self.children) else None

    def to_dict(self) -> dict:
        d = {"counts": self.counts.tolist(), "dist": self.dist.tolist()}
        if not self.is_leaf:
            d.update(attribute=self.attribute, kind=self.kind,
                     branch_weights=self.branch_weights.tolist(),
                     children=[c.to_dict() for c in self.children])
            if self.threshold is not None:
                d["threshold"] = self.threshold
            if self.value is not None:
                d["value"] = self.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        node = cls(np.array(d["counts"], dtype=float), np.array(d["dist"], dtype=float))
        if "attribute" in d:
            node.attribute = d["attribute"]
            node.kind = d["kind"]
            node.threshold = d.get("threshold")
            node.value = d.get("value")
            node.branch_weights = np.array(d["branch_weights"], dtype=float)
            node.children = [cls.from_dict(c) for c in d["children"]]
        return node


def _iter_nodes(node: Node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def _depth(node: Node) -> int:
    return 0 if node.is_leaf else 1 + max(_depth(c) for c in node.children)


def _route(node: Node, x: np.ndarray) -> np.ndarray:
    if node.is_leaf:
        return node.dist
    v = x[node.attribute]
    if math.isnan(v):
        bw = node.branch_weights
        total = bw.sum()
        if total <= 0:
            return node.dist
        out = np.zeros_like(node.dist)
        for c, wt in zip(node.children, bw):
            if wt > 0:
                out += (wt / total) * _route(c, x)
        return out
    j = node.branch_of(v)
    if j is None:
        return node.dist
    return _route(node.children[j], x)


class TreeModel(Model):
    learner = "tree"

    def __init__(self, root: Node, features, class_labels, learner="tree", **kw):
        super().__init__(features, class_labels, **kw)
        self.root = root
        self.learner = learner

    def _predict_matrix(self, X):
        out = np.empty((len(X), self.num_classes))
        for i, x in enumerate(X):
            p = _route(self.root, x)
            out[i] = p / p.sum()
        return out

    @property
    def node_count(self) -> int:
        return sum(1 for _ in _iter_nodes(self.root))

    @property
    def leaf_count(self) -> int:
        return sum(1 for n in _iter_nodes(self.root) if n.is_leaf)

    @property
    def depth(self) -> int:
        return _depth(self.root)

    def referenced_attributes(self) -> set[str]:
        return {self.features[n.attribute].name for n in _iter_nodes(self.root) if not n.is_leaf}

    def _body(self) -> dict:
        return {"root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeModel":
        m = cls.__new__(cls)
        m._init_from(doc)
        m.root = Node.from_dict(doc["model"]["root"])
        return m

    def render(self) -> str:
        lines = []

        def leaf_text(n: Node) -> str:
            k = int(np.argmax(n.dist))
            tot = float(n.counts.sum())
            err = tot - float(n.counts[k]) if tot > 0 else 0.0
            return f"{self.class_labels[k]} ({tot:.1f}/{err:.1f})"

        def walk(n: Node, depth: int) -> None:
            a = self.features[n.attribute]
            for j, c in enumerate(n.children):
                if n.kind == "numeric":
                    test = f"{a.name} {'<=' if j == 0 else '>'} {n.threshold:g}"
                elif n.kind == "equals":
                    test = f"{a.name} {'=' if j == 0 else '!='} {a.values[n.value]}"
                else:
                    test = f"{a.name} = {a.values[j]}"
                prefix = "|   " * depth + test
                if c.is_leaf:
                    lines.append(f"{prefix}: {leaf_text(c)}")
                else:
                    lines.append(prefix)
                    walk(c, depth + 1)

        if self.root.is_leaf:
            lines.append(f": {leaf_text(self.root)}")
        else:
            walk(self.root, 0)
        lines.append("")
        lines.append(f"Number of Leaves  : {self.leaf_count}")
        lines.append(f"Size of the tree : {self.node_count}")
        return "\n".join(lines)


class ForestModel(Model):
    learner = "random-forest"

    def __init__(self, members, features, class_labels, **kw):
        super().__init__(features, class_labels, **kw)
        self.members = list(members)

    def _predict_matrix(self, X):
        total = np.zeros((len(X), self.num_classes))
        for tree in self.members:
            total += tree._predict_matrix(X)
        return total / len(self.members)

    def referenced_attributes(self) -> set[str]:
        return set().union(*(t.referenced_attributes() for t in self.members))

    def _body(self) -> dict:
        return {"members": [{"seed": t.seed, "root": t.root.to_dict()} for t in self.members]}

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        m = cls.__new__(cls)
        m._init_from(doc)
        m.members = [TreeModel(Node.from_dict(t["root"]), m.features, m.class_labels, "random-tree",
                               class_name=m.class_name, seed=t["seed"])
                     for t in doc["model"]["members"]]
        return m

    def render(self) -> str:
        return f"Random forest of {len(self.members)} trees, each using " \
               f"{self.params.get('random_k')} random attributes per split"


# ---------------------------------------------------------------------------
# growing


@dataclass
class _Choice:
    attribute: int
    kind: str
    children: np.ndarray
    gain: float
    ratio: float | None = None
    threshold: float | None = None
    value: int | None = None


class _Grower:
    def __init__(self, X, y, m, features, params: TreeParams, rng=None, random_k=None):
        self.X = X
        self.y = y
        self.m = m
        self.features = features
        self.p = params
        self.rng = rng
        self.random_k = random_k
        self.min_leaf = params.min_instances_per_leaf

    def _counts(self, rows, w) -> np.ndarray:
        return np.bincount(self.y[rows], weights=w, minlength=self.m)

    def grow(self, rows, w, used=frozenset(), depth=0, parent_dist=None) -> Node:
        counts = self._counts(rows, w)
        total = counts.sum()
        if total <= 0:
            return Node(counts, parent_dist)
        node = Node(counts, normalize(counts))
        if np.count_nonzero(counts > 0) <= 1:
            return node
        if self.p.max_depth is not None and depth >= self.p.max_depth:
            return node
        if total < 2 * self.min_leaf:
            return node
        choice = self._best_split(rows, w, used, counts)
        if choice is None:
            return node
        node.attribute = choice.attribute
        node.kind = choice.kind
        node.threshold = choice.threshold
        node.value = choice.value
        parts, bw = self._partition(node, rows, w)
        node.branch_weights = bw
        child_used = used | {choice.attribute} if choice.kind == "nominal" else used
        node.children = [self.grow(r, cw, child_used, depth + 1, node.dist) for r, cw in parts]
        return node

    def _partition(self, node: Node, rows, w):
        """Route rows into ``node``'s branches; missing values go everywhere, fractionally."""
        col = self.X[rows, node.attribute]
        known = ~np.isnan(col)
        if node.kind == "numeric":
            branch = np.where(col <= node.threshold, 0, 1)
            v = 2
        elif node.kind == "equals":
            branch = np.where(col == node.value, 0, 1)
            v = 2
        else:
            v = len(self.features[node.attribute].values)
            branch = np.where(known, np.nan_to_num(col), -1).astype(np.intp)
        kb = branch[known]
        known_w = np.bincount(kb, weights=w[known], minlength=v)
        kt = known_w.sum()
        frac = known_w / kt if kt > 0 else np.zeros(v)
        miss_rows, miss_w = rows[~known], w[~known]
        parts = []
        for j in range(v):
            sel = known & (branch == j)
            r = np.concatenate([rows[sel], miss_rows])
            cw = np.concatenate([w[sel], miss_w * frac[j]])
            keep = cw > 0
            parts.append((r[keep], cw[keep]))
        bw = np.array([cw.sum() for _, cw in parts])
        return parts, bw

    # -- split search -----------------------------------------------------------

    def _best_split(self, rows, w, used, counts) -> _Choice | None:
        n_feat = len(self.features)
        allowed = [a for a in range(n_feat) if not (self.features[a].is_nominal and a in used)]
        if not allowed:
            return None
        parent_h = float(entropy_rows(counts))
        parent_g = float(gini_rows(counts))
        evaluated: list[_Choice] = []
        if self.rng is None or self.random_k is None or self.random_k >= len(allowed):
            if self.rng is not None:
                self.rng.permutation(len(allowed))
            for a in allowed:
                c = self._evaluate(a, rows, w, counts, parent_h, parent_g)
                if c is not None:
                    evaluated.append(c)
        else:
            order = self.rng.permutation(allowed)
            found = False
            for i, a in enumerate(order):
                if i >= self.random_k and found:
                    break
                c = self._evaluate(int(a), rows, w, counts, parent_h, parent_g)
                if c is not None:
                    evaluated.append(c)
                    found = found or c.gain > TOL
            evaluated.sort(key=lambda c: c.attribute)
        return self._select(evaluated)

    def _select(self, cands: list[_Choice]) -> _Choice | None:
        if not cands:
            return None
        crit = self.p.criterion
        if crit == "gain_ratio":
            positive = [c for c in cands if c.gain > TOL]
            if positive:
                mean = sum(c.gain for c in positive) / len(positive)
                pool = [c for c in positive if c.gain >= mean - TOL and c.ratio is not None]
                best = None
                for c in pool:
                    if best is None or c.ratio > best.ratio + TOL:
                        best = c
                if best is not None:
                    return best
            if not self.p.allow_zero_gain:
                return None
        best = None
        for c in cands:
            if best is None or c.gain > best.gain + TOL:
                best = c
        if best.gain <= TOL and not self.p.allow_zero_gain:
            return None
        return best

    def _score(self, children: np.ndarray, parent_h: float, parent_g: float):
        """Vectorized (gain, ratio) over a stack of (..., v, m) child count arrays."""
        cw = children.sum(axis=-1)
        tot = cw.sum(axis=-1, keepdims=True)
        frac = cw / tot
        if self.p.criterion == "gini":
            gain = parent_g - np.sum(frac * gini_rows(children), axis=-1)
            return gain, None
        gain = parent_h - np.sum(frac * entropy_rows(children), axis=-1)
        if self.p.criterion == "gain_ratio":
            si = entropy_rows(cw)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(si > TOL, gain / si, np.nan)
            return gain, ratio
        return gain, None

    def _evaluate(self, a, rows, w, counts, parent_h, parent_g) -> _Choice | None:
        attr = self.features[a]
        col = self.X[rows, a]
        known = ~np.isnan(col)
        if not known.any():
            return None
        ky, kw = self.y[rows][known], w[known]
        missing = counts - np.bincount(ky, weights=kw, minlength=self.m)
        missing[missing < 0] = 0.0
        ml = self.min_leaf - 1e-9
        if attr.is_nominal:
            v = len(attr.values)
            kc = np.zeros((v, self.m))
            np.add.at(kc, (col[known].astype(np.intp), ky), kw)
            if self.p.criterion == "gini":
                known_total = kc.sum(axis=0)
                stack = np.stack([np.stack([kc[j], known_total - kc[j]]) for j in range(v)])
                ch = spread_missing(stack, missing)
                ok = np.all(ch.sum(axis=-1) >= ml, axis=-1) & np.all(ch.sum(axis=-1) > 0, axis=-1)
                if not ok.any():
                    return None
                gain, _ = self._score(ch, parent_h, parent_g)
                gain = np.where(ok, gain, -np.inf)
                j = _first_max(gain)
                return _Choice(a, "equals", ch[j], float(gain[j]), value=j)
            ch = spread_missing(kc, missing)
            cw = ch.sum(axis=1)
            if np.count_nonzero(cw >= ml) < 2 or np.count_nonzero(cw > 0) < 2:
                return None
            gain, ratio = self._score(ch, parent_h, parent_g)
            r = None if ratio is None or np.isnan(ratio) else float(ratio)
            return _Choice(a, "nominal", ch, float(gain), ratio=r)
        thresholds, left = boundary_thresholds(col[known], ky, kw, self.m)
        if len(thresholds) == 0:
            return None
        known_total = np.bincount(ky, weights=kw, minlength=self.m)
        stack = np.stack([left, known_total - left], axis=1)
        ch = spread_missing(stack, missing)
        cw = ch.sum(axis=-1)
        ok = np.all(cw >= ml, axis=1) & np.all(cw > 0, axis=1)
        if not ok.any():
            return None
        gain, ratio = self._score(ch, parent_h, parent_g)
        gain = np.where(ok, gain, -np.inf)
        j = _first_max(gain)
        r = None
        if ratio is not None and not np.isnan(ratio[j]):
            r = float(ratio[j])
        return _Choice(a, "numeric", ch[j], float(gain[j]), ratio=r, threshold=float(thresholds[j]))


def _first_max(scores: np.ndarray) -> int:
    best = np.max(scores)
    return int(np.flatnonzero(scores >= best - TOL)[0])


# ---------------------------------------------------------------------------
# pruning


def _added_errors(n: float, e: float, cf: float) -> float:
    """Upper confidence bound on extra errors at a leaf (C4.5 pessimistic estimate)."""
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1 - cf ** (1 / n))
        if e == 0:
            return base
        return base + e * (_added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _leaf_estimate(node: Node, cf: float) -> float:
    n = float(node.counts.sum())
    if n <= 0:
        return 0.0
    e = n - float(node.counts.max())
    return e + _added_errors(n, e, cf)


def prune_pessimistic(node: Node, cf: float) -> float:
    """Bottom-up subtree replacement; returns the estimated errors of ``node``."""
    if node.is_leaf:
        return _leaf_estimate(node, cf)
    subtree = sum(prune_pessimistic(c, cf) for c in node.children)
    as_leaf = _leaf_estimate(node, cf)
    if as_leaf <= subtree + 0.1:
        node.make_leaf()
        return as_leaf
    return subtree


def _route_rows(grower: _Grower, node: Node, rows, w):
    parts, _ = grower._partition(node, rows, w)
    return parts


def prune_reduced_error(grower: _Grower, node: Node, rows, w) -> float:
    """Replace subtrees by leaves when held-out errors do not increase.

    Returns the prune-set error weight of the (possibly pruned) subtree.
    """
    counts = np.bincount(grower.y[rows], weights=w, minlength=grower.m) if len(rows) else np.zeros(grower.m)
    as_leaf = float(counts.sum() - counts[int(np.argmax(node.dist))])
    if node.is_leaf:
        return as_leaf
    parts = _route_rows(grower, node, rows, w) if len(rows) else [(rows, w)] * len(node.children)
    subtree = sum(prune_reduced_error(grower, c, r, cw) for c, (r, cw) in zip(node.children, parts))
    if as_leaf <= subtree + 1e-12:
        node.make_leaf()
        return as_leaf
    return subtree


def backfit(grower: _Grower, node: Node, rows, w, parent_dist=None) -> None:
    """Re-estimate every node's class weights from ``rows``."""
    counts = np.bincount(grower.y[rows], weights=w, minlength=grower.m) if len(rows) else np.zeros(grower.m)
    node.counts = counts
    if counts.sum() > 0:
        node.dist = normalize(counts)
    elif parent_dist is not None:
        node.dist = parent_dist
    if node.is_leaf:
        return
    parts, bw = grower._partition(node, rows, w)
    node.branch_weights = bw
    for c, (r, cw) in zip(node.children, parts):
        backfit(grower, c, r, cw, node.dist)


# ---------------------------------------------------------------------------
# learners


def _check_trainable(d: Dataset) -> None:
    if d.class_index is None:
        raise DataError("training data needs a class attribute")
    if len(d) == 0 or d.total_weight <= 0:
        raise DataError("empty dataset")


def _fit(d: Dataset, p: TreeParams, learner: str, rng=None, random_k=None,
         rows=None, weights=None) -> TreeModel:
    _check_trainable(d)
    p.validate(len(d.feature_indices))
    start = time.perf_counter()
    rows = np.arange(len(d)) if rows is None else rows
    w = np.asarray(d.weights[rows] if weights is None else weights, dtype=float)
    grower = _Grower(d.X, d.y, d.num_classes, d.features, p, rng, random_k)
    meta = {"class_position": d.class_index}
    if rng is not None:
        meta["rng"] = RNG_NAME
    if p.pruning == "reduced_error":
        sub = d.subset(rows, w)
        if len(sub) >= p.prune_folds:
            folds = stratified_folds(sub, p.prune_folds, p.seed)
            grow_sel, prune_sel = folds.folds != 0, folds.folds == 0
            root = grower.grow(rows[grow_sel], w[grow_sel])
            meta["nodes_before_pruning"] = sum(1 for _ in _iter_nodes(root))
            prune_reduced_error(grower, root, rows[prune_sel], w[prune_sel])
            backfit(grower, root, rows, w)
        else:
            root = grower.grow(rows, w)
            meta["nodes_before_pruning"] = sum(1 for _ in _iter_nodes(root))
            meta["pruning_skipped"] = "prune set empty"
    else:
        root = grower.grow(rows, w)
        meta["nodes_before_pruning"] = sum(1 for _ in _iter_nodes(root))
        if p.pruning == "confidence":
            prune_pessimistic(root, p.confidence)
    params = asdict(p)
    if random_k is not None:
        params["random_k"] = random_k
    return TreeModel(root, d.features, d.class_labels, learner, class_name=d.class_attribute.name,
                     params=params, seed=p.seed, build_time=time.perf_counter() - start, metadata=meta)


def induce(d: Dataset, p: TreeParams | None = None) -> TreeModel:
    """Generic greedy tree with the criterion and pruning named in ``p``."""
    return _fit(d, p or TreeParams(), "tree")


def train_decision_stump(d: Dataset) -> TreeModel:
    p = TreeParams(criterion="information_gain", min_instances_per_leaf=1.0, max_depth=1)
    return _fit(d, p, "decision-stump")


def train_j48(d: Dataset, p: TreeParams | None = None) -> TreeModel:
    p = p or TreeParams(criterion="gain_ratio", pruning="confidence")
    return _fit(d, p, "j48")


def train_reptree(d: Dataset, p: TreeParams | None = None) -> TreeModel:
    p = p or TreeParams(criterion="information_gain", pruning="reduced_error")
    return _fit(d, p, "reptree")


def train_random_tree(d: Dataset, p: TreeParams | None = None) -> TreeModel:
    p = p or TreeParams()
    k = p.random_k or default_random_k(len(d.feature_indices))
    rng = np.random.Generator(np.random.PCG64(p.seed))
    return _fit(d, p, "random-tree", rng=rng, random_k=k)


def train_random_forest(d: Dataset, p: TreeParams | None = None) -> ForestModel:
    """Bagged random trees; member ``t`` uses seed ``p.seed + t``."""
    p = p or TreeParams()
    _check_trainable(d)
    p.validate(len(d.feature_indices))
    k = p.random_k or default_random_k(len(d.feature_indices))
    start = time.perf_counter()
    n = len(d)
    members = []
    for t in range(p.forest_size):
        tree_seed = p.seed + t
        rng = np.random.Generator(np.random.PCG64(tree_seed))
        member_p = TreeParams(**{**asdict(p), "seed": tree_seed, "pruning": "none"})
        if p.bagging:
            draws = np.bincount(rng.integers(0, n, n), minlength=n)
            rows = np.flatnonzero(draws)
            w = draws[rows] * d.weights[rows]
        else:
            rows, w = None, None
        members.append(_fit(d, member_p, "random-tree", rng=rng, random_k=k, rows=rows, weights=w))
    params = asdict(p)
    params["random_k"] = k
    return ForestModel(members, d.features, d.class_labels, class_name=d.class_attribute.name,
                       params=params, seed=p.seed, build_time=time.perf_counter() - start,
                       metadata={"rng": RNG_NAME, "class_position": d.class_index})


def predict(model: Model, x) -> np.ndarray:
    """Class probabilities for one instance (or row of feature values)."""
    return model.predict_proba(x)[0]
