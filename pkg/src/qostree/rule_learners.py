"""Rule-based classifiers: ZeroR, OneR, Decision Table, PART and JRip (RIPPER).

ZeroR, OneR, PART and JRip produce a :class:`DecisionList` whose last rule
has an empty antecedent. The decision table keeps a lookup keyed on a
searched-for attribute subset.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import DataError, Dataset
from .models import RNG_NAME, Model, normalize, point_mass
from .split_criteria import TOL, boundary_thresholds, entropy_rows
from .tree_learners import Node, TreeParams, _Grower, _leaf_estimate

OPS = ("==", "<=", ">", ">=")


@dataclass(frozen=True)
class Condition:
    attribute: int
    op: str
    value: float

    def mask(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.attribute]
        # NaN compares False, so missing values never satisfy a condition
        if self.op == "==":
            return col == self.value
        if self.op == "<=":
            return col <= self.value
        if self.op == ">":
            return col > self.value
        if self.op == ">=":
            return col >= self.value
        raise ValueError(f"unknown operator {self.op!r}")

    def render(self, features) -> str:
        a = features[self.attribute]
        if self.op == "==":
            return f"{a.name} = {a.values[int(self.value)]}"
        return f"{a.name} {self.op} {self.value:g}"

    def to_list(self) -> list:
        return [self.attribute, self.op, self.value]


@dataclass
class Rule:
    conditions: tuple
    label: int
    counts: np.ndarray
    costs: tuple = field(default=(), repr=False)

    @property
    def p(self) -> float:
        return float(self.counts[self.label])

    @property
    def n(self) -> float:
        return float(self.counts.sum() - self.counts[self.label])

    @property
    def is_default(self) -> bool:
        return not self.conditions

    def mask(self, X: np.ndarray) -> np.ndarray:
        out = np.ones(len(X), dtype=bool)
        for c in self.conditions:
            out &= c.mask(X)
        return out


def first_match(rules, X: np.ndarray) -> np.ndarray:
    """Index of the first rule each row satisfies (-1 if none)."""
    hit = np.full(len(X), -1, dtype=np.intp)
    for i, r in enumerate(rules):
        sel = (hit < 0) & r.mask(X)
        hit[sel] = i
    return hit


def coverage_counts(rules, X, y, w, m) -> list[np.ndarray]:
    """Per-rule class weights of the training rows each rule fires on."""
    hit = first_match(rules, X)
    return [np.bincount(y[hit == i], weights=w[hit == i], minlength=m) for i in range(len(rules))]


class DecisionList(Model):
    """Ordered rules, first match fires; the last rule is a catch-all default.

    With ``point_mass`` the prediction is the consequent with probability 1,
    otherwise the stored coverage distribution of the firing rule.
    """

    learner = "decision-list"

    def __init__(self, rules, features, class_labels, learner="decision-list", point_mass=True, **kw):
        super().__init__(features, class_labels, **kw)
        rules = list(rules)
        if not rules or not rules[-1].is_default:
            raise ValueError("a decision list must end with a default rule")
        self.rules = rules
        self.learner = learner
        self.point_mass = point_mass

    def rule_distribution(self, rule: Rule) -> np.ndarray:
        if self.point_mass or rule.counts.sum() <= 0:
            return point_mass(rule.label, self.num_classes)
        return normalize(rule.counts)

    def _predict_matrix(self, X):
        hit = first_match(self.rules, X)
        table = np.array([self.rule_distribution(r) for r in self.rules])
        return table[hit]

    def referenced_attributes(self) -> set[str]:
        return {self.features[c.attribute].name for r in self.rules for c in r.conditions}

    def render(self) -> str:
        lines = []
        for r in self.rules:
            ante = " AND ".join(c.render(self.features) for c in r.conditions) or "TRUE"
            lines.append(f"IF {ante} THEN {self.class_labels[r.label]} ({r.p:g}/{r.n:g})")
        lines.append("")
        lines.append(f"Number of Rules : {len(self.rules)}")
        return "\n".join(lines)

    def _body(self) -> dict:
        return {
            "point_mass": self.point_mass,
            "rules": [{"conditions": [c.to_list() for c in r.conditions], "label": r.label,
                       "counts": r.counts.tolist(), "costs": list(r.costs)} for r in self.rules],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionList":
        m = cls.__new__(cls)
        m._init_from(doc)
        body = doc["model"]
        m.point_mass = body["point_mass"]
        m.rules = [Rule(tuple(Condition(a, op, v) for a, op, v in r["conditions"]), r["label"],
                        np.array(r["counts"], dtype=float), tuple(r.get("costs", ())))
                   for r in body["rules"]]
        return m


class DecisionTableModel(Model):
    learner = "decision-table"

    def __init__(self, subset, table, default_counts, features, class_labels, **kw):
        super().__init__(features, class_labels, **kw)
        self.subset = tuple(subset)
        self.table = dict(table)
        self.default_counts = np.asarray(default_counts, dtype=float)

    def _predict_matrix(self, X):
        fallback = normalize(self.default_counts)
        out = np.empty((len(X), self.num_classes))
        cols = X[:, list(self.subset)] if self.subset else np.empty((len(X), 0))
        for i, row in enumerate(cols):
            counts = None
            if not np.any(np.isnan(row)):
                counts = self.table.get(tuple(float(v) for v in row))
            out[i] = fallback if counts is None or counts.sum() <= 0 else normalize(counts)
        return out

    def referenced_attributes(self) -> set[str]:
        return {self.features[a].name for a in self.subset}

    def render(self) -> str:
        names = [self.features[a].name for a in self.subset]
        return (f"Decision table on {{{', '.join(names)}}}: {len(self.table)} rows, "
                f"default {self.class_labels[int(np.argmax(self.default_counts))]}")

    def _body(self) -> dict:
        rows = sorted(([list(k), v.tolist()] for k, v in self.table.items()), key=lambda r: r[0])
        return {"subset": list(self.subset), "rows": rows, "default": self.default_counts.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTableModel":
        m = cls.__new__(cls)
        m._init_from(doc)
        body = doc["model"]
        m.subset = tuple(body["subset"])
        m.table = {tuple(float(v) for v in k): np.array(c, dtype=float) for k, c in body["rows"]}
        m.default_counts = np.array(body["default"], dtype=float)
        return m


def _check(d: Dataset) -> None:
    if d.class_index is None:
        raise DataError("training data needs a class attribute")
    if len(d) == 0 or d.total_weight <= 0:
        raise DataError("empty dataset")


def _kw(d: Dataset, params: dict, start: float, seed=None, **meta) -> dict:
    return {"class_name": d.class_attribute.name, "params": params, "seed": seed,
            "build_time": time.perf_counter() - start,
            "metadata": {"class_position": d.class_index, **meta}}


def _prior(d: Dataset) -> np.ndarray:
    return np.bincount(d.y, weights=d.weights, minlength=d.num_classes)


# ---------------------------------------------------------------------------
# ZeroR


def train_zeror(d: Dataset) -> DecisionList:
    _check(d)
    start = time.perf_counter()
    counts = _prior(d)
    rule = Rule((), int(np.argmax(counts)), counts)
    return DecisionList([rule], d.features, d.class_labels, "zeror", point_mass=False,
                        **_kw(d, {}, start))


# ---------------------------------------------------------------------------
# OneR


def _majority(counts: np.ndarray, overall: np.ndarray) -> int:
    """Largest weight; ties to the larger overall class, then the lower index."""
    top = counts.max()
    tied = np.flatnonzero(counts >= top - 1e-12)
    if len(tied) == 1:
        return int(tied[0])
    return int(max(tied, key=lambda k: (overall[k], -k)))


def _oner_numeric(values, y, w, m, min_bucket, overall):
    """Greedy interval formation; returns (upper thresholds, bucket classes, correct weight)."""
    order = np.argsort(values, kind="stable")
    v, yy, ww = values[order], y[order], w[order]
    n = len(v)
    buckets = []
    i = 0
    while i < n:
        counts = np.zeros(m)
        while i < n and counts.max() < min_bucket - 1e-12:
            counts[yy[i]] += ww[i]
            i += 1
        maj = _majority(counts, overall)
        while i < n and yy[i] == maj:
            counts[yy[i]] += ww[i]
            i += 1
        while 0 < i < n and v[i] == v[i - 1]:
            counts[yy[i]] += ww[i]
            i += 1
        buckets.append([i, counts, _majority(counts, overall)])
    merged = []
    for b in buckets:
        if merged and merged[-1][2] == b[2]:
            merged[-1][0] = b[0]
            merged[-1][1] = merged[-1][1] + b[1]
        else:
            merged.append(b)
    thresholds = [(v[end - 1] + v[end]) / 2.0 for end, _, _ in merged[:-1]]
    classes = [c for _, _, c in merged]
    correct = sum(float(cnt[c]) for _, cnt, c in merged)
    return thresholds, classes, correct


def train_oner(d: Dataset, min_bucket: float = 6.0) -> DecisionList:
    """One-attribute rule set with the most correctly classified training weight."""
    _check(d)
    start = time.perf_counter()
    X, y, w, m = d.X, d.y, d.weights, d.num_classes
    overall = _prior(d)
    default = _majority(overall, overall)
    best = None
    for a, attr in enumerate(d.features):
        col = X[:, a]
        known = ~np.isnan(col)
        miss_correct = float(w[~known & (y == default)].sum())
        rules: list[Rule] = []
        dflt = default
        if attr.is_nominal:
            kc = np.zeros((len(attr.values), m))
            np.add.at(kc, (col[known].astype(np.intp), y[known]), w[known])
            correct = miss_correct
            for v in range(len(attr.values)):
                if kc[v].sum() > 0:
                    c = _majority(kc[v], overall)
                    rules.append(Rule((Condition(a, "==", float(v)),), c, kc[v]))
                    correct += kc[v][c]
        else:
            if not known.any():
                continue
            thresholds, classes, correct = _oner_numeric(col[known], y[known], w[known], m,
                                                         min_bucket, overall)
            if len(classes) == 1:
                dflt = classes[0]
                miss_correct = float(w[~known & (y == dflt)].sum())
            for t, c in zip(thresholds, classes):
                rules.append(Rule((Condition(a, "<=", float(t)),), c, np.zeros(m)))
            if thresholds:
                rules.append(Rule((Condition(a, ">", float(thresholds[-1])),), classes[-1], np.zeros(m)))
            correct += miss_correct
        if best is None or correct > best[0] + 1e-9:
            best = (correct, a, rules, dflt)
    if best is None:
        rules, dflt, chosen = [], default, None
    else:
        _, chosen, rules, dflt = best
    rules = rules + [Rule((), dflt, np.zeros(m))]
    for r, c in zip(rules, coverage_counts(rules, X, y, w, m)):
        r.counts = c
    chosen_name = d.features[chosen].name if chosen is not None else None
    return DecisionList(rules, d.features, d.class_labels, "oner", point_mass=True,
                        **_kw(d, {"min_bucket": min_bucket}, start, attribute=chosen_name))


# ---------------------------------------------------------------------------
# Decision Table


def _keys(X: np.ndarray, subset) -> tuple[np.ndarray, np.ndarray]:
    """Group ids of rows by their values on ``subset``; rows with a missing cell get -1."""
    if not subset:
        return np.zeros(len(X), dtype=np.intp), np.ones(len(X), dtype=bool)
    cols = X[:, list(subset)]
    ok = ~np.any(np.isnan(cols), axis=1)
    inv = np.full(len(X), -1, dtype=np.intp)
    if ok.any():
        _, g = np.unique(cols[ok], axis=0, return_inverse=True)
        inv[ok] = g.reshape(-1)
    return inv, ok


def loo_fitness(X, y, w, m, subset) -> float:
    """Leave-one-out weighted accuracy of a majority table keyed on ``subset``."""
    total = w.sum()
    inv, ok = _keys(X, subset)
    own = np.zeros((len(X), m))
    own[np.arange(len(X)), y] = w
    glob = np.bincount(y, weights=w, minlength=m)
    cand = glob - own
    if ok.any():
        groups = np.zeros((inv.max() + 1, m))
        np.add.at(groups, (inv[ok], y[ok]), w[ok])
        local = groups[inv[ok]] - own[ok]
        has = local.sum(axis=1) > 1e-12
        rows = np.flatnonzero(ok)
        cand[rows[has]] = local[has]
    pred = np.argmax(cand, axis=1)
    return float(w[pred == y].sum() / total)


def train_decision_table(d: Dataset, max_stale: int = 5) -> DecisionTableModel:
    """Forward best-first search over attribute subsets scored by LOO accuracy."""
    _check(d)
    start = time.perf_counter()
    X, y, w, m = d.X, d.y, d.weights, d.num_classes
    p = len(d.features)

    def better(f, s, bf, bs) -> bool:
        if f > bf + 1e-12:
            return True
        return abs(f - bf) <= 1e-12 and (len(s), s) < (len(bs), bs)

    best_s: tuple = ()
    best_f = loo_fitness(X, y, w, m, best_s)
    heap = [(-best_f, 0, best_s)]
    seen = {best_s}
    stale = 0
    evaluated = 1
    while heap and stale < max_stale:
        _, _, s = heapq.heappop(heap)
        improved = False
        for a in range(p):
            if a in s:
                continue
            child = tuple(sorted(s + (a,)))
            if child in seen:
                continue
            seen.add(child)
            f = loo_fitness(X, y, w, m, child)
            evaluated += 1
            heapq.heappush(heap, (-f, len(child), child))
            if better(f, child, best_f, best_s):
                if f > best_f + 1e-12:
                    improved = True
                best_f, best_s = f, child
        stale = 0 if improved else stale + 1

    table = {}
    inv, ok = _keys(X, best_s)
    cols = X[:, list(best_s)] if best_s else np.empty((len(X), 0))
    for i in np.flatnonzero(ok):
        key = tuple(float(v) for v in cols[i])
        if key not in table:
            table[key] = np.zeros(m)
        table[key][y[i]] += w[i]
    return DecisionTableModel(best_s, table, _prior(d), d.features, d.class_labels,
                              **_kw(d, {"max_stale": max_stale}, start,
                                    loo_accuracy=best_f, subsets_evaluated=evaluated))


# ---------------------------------------------------------------------------
# PART


def _partial_tree(g: _Grower, rows, w, used, cf, order_of: dict) -> Node:
    """Expand the lowest-entropy branches first, stopping at the first non-leaf subtree."""
    counts = g._counts(rows, w)
    node = Node(counts, normalize(counts))
    if np.count_nonzero(counts > 0) <= 1 or counts.sum() < 2 * g.min_leaf:
        return node
    choice = g._best_split(rows, w, used, counts)
    if choice is None:
        return node
    node.attribute, node.kind = choice.attribute, choice.kind
    node.threshold, node.value = choice.threshold, choice.value
    parts, bw = g._partition(node, rows, w)
    node.branch_weights = bw
    child_used = used | {choice.attribute} if choice.kind == "nominal" else used
    ent = [float(entropy_rows(g._counts(r, cw))) if cw.sum() > 0 else math.inf for r, cw in parts]
    order = sorted(range(len(parts)), key=lambda j: (ent[j], j))
    node.children = [None] * len(parts)
    order_of[id(node)] = order
    all_leaves = True
    for j in order:
        r, cw = parts[j]
        if cw.sum() <= 0:
            child = Node(np.zeros(g.m), node.dist)
        else:
            child = _partial_tree(g, r, cw, child_used, cf, order_of)
        node.children[j] = child
        if not child.is_leaf:
            all_leaves = False
            break
    if all_leaves:
        subtree = sum(_leaf_estimate(c, cf) for c in node.children)
        if _leaf_estimate(node, cf) <= subtree + 0.1:
            node.make_leaf()
    return node


def _branch_condition(node: Node, j: int) -> Condition:
    if node.kind == "numeric":
        return Condition(node.attribute, "<=" if j == 0 else ">", node.threshold)
    return Condition(node.attribute, "==", float(j))


def _best_leaf(node: Node, order_of: dict):
    """Leaf with the largest covered weight (first in expansion order) and its path."""
    best = None

    def walk(n, path):
        nonlocal best
        if n is None:
            return
        if n.is_leaf:
            cov = float(n.counts.sum())
            if cov > 0 and (best is None or cov > best[0] + 1e-12):
                best = (cov, n, path)
            return
        for j in order_of.get(id(n), range(len(n.children))):
            walk(n.children[j], path + [_branch_condition(n, j)])

    walk(node, [])
    return best


def train_part(d: Dataset, p: TreeParams | None = None) -> DecisionList:
    """Decision list whose rules are the best leaves of successive partial trees."""
    _check(d)
    p = p or TreeParams(criterion="gain_ratio", pruning="confidence")
    p.validate(len(d.features))
    start = time.perf_counter()
    X, y, w, m = d.X, d.y, d.weights, d.num_classes
    g = _Grower(X, y, m, d.features, p)
    remaining = np.ones(len(d), dtype=bool)
    rules: list[Rule] = []
    while remaining.any():
        rows = np.flatnonzero(remaining)
        order_of: dict = {}
        root = _partial_tree(g, rows, w[rows], frozenset(), p.confidence, order_of)
        if root.is_leaf:
            break
        found = _best_leaf(root, order_of)
        if found is None:
            break
        _, leaf, path = found
        rule = Rule(tuple(path), int(np.argmax(leaf.dist)), np.zeros(m))
        covered = remaining & rule.mask(X)
        if not covered.any():
            break
        rule.counts = np.bincount(y[covered], weights=w[covered], minlength=m)
        rules.append(rule)
        remaining &= ~covered
    rest = np.bincount(y[remaining], weights=w[remaining], minlength=m)
    dflt = int(np.argmax(rest)) if rest.sum() > 0 else int(np.argmax(_prior(d)))
    rules.append(Rule((), dflt, rest))
    return DecisionList(rules, d.features, d.class_labels, "part", point_mass=True,
                        **_kw(d, asdict(p), start))


# ---------------------------------------------------------------------------
# JRip / RIPPER
#
# Description length of a rule set for one class (positives vs the rest):
#   theory bits     = sum over rules of log2(#candidate conditions) at every
#                     growth step that produced a kept condition
#   exception bits  = log2 C(covered, false positives)
#                   + log2 C(uncovered, false negatives)
# Growth is stopped once a new rule pushes the total more than 64 bits past
# the best total seen so far.

DL_SLACK = 64.0


def _log2_binom(n: float, k: float) -> float:
    if n <= 0:
        return 0.0
    k = min(max(k, 0.0), n)
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


class _Ripper:
    def __init__(self, X, pos, w, features, rng, folds, min_weight):
        self.X, self.pos, self.w = X, pos, w
        self.features = features
        self.rng = rng
        self.folds = folds
        self.min_weight = min_weight

    def description_length(self, rules) -> float:
        theory = sum(sum(r.costs) for r in rules)
        covered = np.zeros(len(self.X), dtype=bool)
        for r in rules:
            covered |= r.mask(self.X)
        w, pos = self.w, self.pos
        cover = w[covered].sum()
        fp = w[covered & ~pos].sum()
        uncover = w[~covered].sum()
        fn = w[~covered & pos].sum()
        return theory + _log2_binom(cover, fp) + _log2_binom(uncover, fn)

    def split(self, idx: np.ndarray):
        """Stratified grow/prune split of ``idx``; prune gets one share in ``folds``."""
        if len(idx) < self.folds:
            return idx, idx[:0]
        perm = idx[self.rng.permutation(len(idx))]
        perm = perm[np.argsort(~self.pos[perm], kind="stable")]
        is_prune = (np.arange(len(perm)) % self.folds) == 0
        return np.sort(perm[~is_prune]), np.sort(perm[is_prune])

    def grow(self, idx, start=(), start_costs=()) -> Rule:
        X, pos, w = self.X[idx], self.pos[idx], self.w[idx]
        conds = list(start)
        costs = list(start_costs)
        covered = np.ones(len(idx), dtype=bool)
        for c in conds:
            covered &= c.mask(X)
        used = {c.attribute for c in conds if c.op == "=="}
        while True:
            p = w[covered & pos].sum()
            n = w[covered & ~pos].sum()
            if p <= 0 or n <= 0:
                break
            base = math.log2(p / (p + n))
            best_gain, best_cond, n_choices = TOL, None, 0
            cw, cpos = w[covered], pos[covered]
            for a, attr in enumerate(self.features):
                col = X[covered, a]
                known = ~np.isnan(col)
                if attr.is_nominal:
                    if a in used:
                        continue
                    vals = col[known].astype(np.intp)
                    pp = np.bincount(vals, weights=cw[known] * cpos[known], minlength=len(attr.values))
                    tt = np.bincount(vals, weights=cw[known], minlength=len(attr.values))
                    n_choices += int(np.count_nonzero(tt > 0))
                    gains = _foil(pp, tt - pp, base, self.min_weight)
                    cands = [Condition(a, "==", float(v)) for v in range(len(attr.values))]
                else:
                    if not known.any():
                        continue
                    th, left = boundary_thresholds(col[known], cpos[known].astype(np.intp), cw[known], 2)
                    if len(th) == 0:
                        continue
                    n_choices += 2 * len(th)
                    tot = np.array([cw[known & ~cpos].sum(), cw[known & cpos].sum()])
                    le = _foil(left[:, 1], left[:, 0], base, self.min_weight)
                    ge = _foil(tot[1] - left[:, 1], tot[0] - left[:, 0], base, self.min_weight)
                    gains = np.column_stack([le, ge]).reshape(-1)
                    cands = [Condition(a, op, float(t)) for t in th for op in ("<=", ">=")]
                if len(gains) == 0:
                    continue
                j = int(np.argmax(gains))
                if gains[j] > best_gain + TOL:
                    best_gain, best_cond = float(gains[j]), cands[j]
            if best_cond is None:
                break
            conds.append(best_cond)
            costs.append(math.log2(max(n_choices, 1)))
            covered &= best_cond.mask(X)
            if best_cond.op == "==":
                used.add(best_cond.attribute)
        return Rule(tuple(conds), 1, np.zeros(2), tuple(costs))

    def prune_value(self, conds, idx) -> float:
        X, pos, w = self.X[idx], self.pos[idx], self.w[idx]
        cov = np.ones(len(idx), dtype=bool)
        for c in conds:
            cov &= c.mask(X)
        p = w[cov & pos].sum()
        n = w[cov & ~pos].sum()
        if p + n <= 0:
            return -math.inf
        return (p - n) / (p + n)

    def prune(self, rule: Rule, idx) -> Rule:
        """Drop trailing conditions while (p - n) / (p + n) on the prune rows improves."""
        k = len(rule.conditions)
        if len(idx) == 0 or k <= 1:
            return rule
        best_k, best_v = k, self.prune_value(rule.conditions, idx)
        for j in range(k - 1, 0, -1):
            v = self.prune_value(rule.conditions[:j], idx)
            if v > best_v + 1e-12:
                best_k, best_v = j, v
        return Rule(rule.conditions[:best_k], rule.label, rule.counts, rule.costs[:best_k])

    def error_rate(self, rule: Rule, idx) -> float:
        X, pos, w = self.X[idx], self.pos[idx], self.w[idx]
        cov = rule.mask(X)
        tot = w[cov].sum()
        if tot <= 0:
            return math.nan
        return float(w[cov & ~pos].sum() / tot)

    def build(self, rules: list) -> list:
        """Add rules until the positives run out or a stopping test on error rate or DL fires."""
        rules = list(rules)
        remaining = np.ones(len(self.X), dtype=bool)
        for r in rules:
            remaining &= ~r.mask(self.X)
        min_dl = self.description_length(rules)
        while self.w[remaining & self.pos].sum() > 0:
            idx = np.flatnonzero(remaining)
            grow_idx, prune_idx = self.split(idx)
            rule = self.grow(grow_idx)
            if not rule.conditions:
                break
            rule = self.prune(rule, prune_idx)
            err = self.error_rate(rule, prune_idx) if len(prune_idx) else math.nan
            if math.isnan(err):
                err = self.error_rate(rule, grow_idx)
            if math.isnan(err) or err > 0.5:
                break
            dl = self.description_length(rules + [rule])
            if dl > min_dl + DL_SLACK:
                break
            covered = remaining & rule.mask(self.X)
            if not covered.any():
                break
            rules.append(rule)
            min_dl = min(min_dl, dl)
            remaining &= ~covered
        return rules

    def optimize(self, rules: list) -> list:
        """One pass: swap each rule for a regrown or extended variant when that lowers the DL."""
        rules = list(rules)
        for i in range(len(rules)):
            others = rules[:i] + rules[i + 1:]
            covered = np.zeros(len(self.X), dtype=bool)
            for r in others:
                covered |= r.mask(self.X)
            idx = np.flatnonzero(~covered)
            if not self.pos[idx].any():
                continue
            grow_idx, prune_idx = self.split(idx)
            variants = [rules[i]]
            replacement = self.prune(self.grow(grow_idx), prune_idx)
            if replacement.conditions:
                variants.append(replacement)
            revision = self.prune(self.grow(grow_idx, rules[i].conditions, rules[i].costs), prune_idx)
            if revision.conditions:
                variants.append(revision)
            dls = [self.description_length(rules[:i] + [v] + rules[i + 1:]) for v in variants]
            best = 0
            for j in range(1, len(variants)):
                if dls[j] < dls[best] - 1e-9:
                    best = j
            rules[i] = variants[best]
        return rules

    def reduce(self, rules: list) -> list:
        """Delete rules, last first, whenever doing so does not lengthen the description."""
        rules = list(rules)
        for i in range(len(rules) - 1, -1, -1):
            without = rules[:i] + rules[i + 1:]
            if self.description_length(without) <= self.description_length(rules) + 1e-9:
                rules = without
        return rules


def _foil(p1: np.ndarray, n1: np.ndarray, base: float, min_weight: float) -> np.ndarray:
    p1 = np.asarray(p1, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    ok = (p1 > 0) & (p1 + n1 >= min_weight - 1e-12)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = p1 * (np.log2(p1 / (p1 + n1)) - base)
    return np.where(ok, g, -np.inf)


def train_jrip(d: Dataset, folds: int = 3, min_weight: float = 2.0, optimizations: int = 2,
               seed: int = 1) -> DecisionList:
    """RIPPER: per-class rule sets, rarest class first, most frequent as default."""
    _check(d)
    if folds < 2:
        raise ValueError("folds must be at least 2")
    start = time.perf_counter()
    X, y, w, m = d.X, d.y, d.weights, d.num_classes
    rng = np.random.Generator(np.random.PCG64(seed))
    prior = _prior(d)
    present = [c for c in range(m) if prior[c] > 0]
    order = sorted(present, key=lambda c: (prior[c], c))
    active = np.ones(len(d), dtype=bool)
    rules: list[Rule] = []
    for c in order[:-1]:
        rows = np.flatnonzero(active)
        rip = _Ripper(X[rows], y[rows] == c, w[rows], d.features, rng, folds, min_weight)
        ruleset = rip.build([])
        for _ in range(optimizations):
            ruleset = rip.optimize(ruleset)
            ruleset = rip.build(ruleset)
        ruleset = rip.reduce(ruleset)
        for r in ruleset:
            r.label = c
            rules.append(r)
            active &= ~r.mask(X)
    rules.append(Rule((), order[-1], np.zeros(m)))
    for r, cnt in zip(rules, coverage_counts(rules, X, y, w, m)):
        r.counts = cnt
    params = {"folds": folds, "min_weight": min_weight, "optimizations": optimizations, "seed": seed}
    return DecisionList(rules, d.features, d.class_labels, "jrip", point_mass=True,
                        **_kw(d, params, start, seed=seed, rng=RNG_NAME))


def predict_rules(model: Model, x) -> np.ndarray:
    """Class probabilities of one instance under a rule model."""
    return model.predict_proba(x)[0]
