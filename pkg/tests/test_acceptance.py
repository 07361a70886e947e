"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the PASS/FAIL lines appear in
the terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import os
import sys
import tempfile
import time
from collections import Counter

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import make_dataset, random_dataset  # noqa: E402
from qostree.cli import main as cli_main  # noqa: E402
from qostree.dataset import load_dataset, stratified_folds  # noqa: E402
from qostree.evaluation import compare_learners, cross_validate, mae, rae, rmse, rrse  # noqa: E402
from qostree.learners import DEFAULT_ROSTER, LearnerSpec  # noqa: E402
from qostree.model_cube import build_cube, load_cube, query  # noqa: E402
from qostree.rule_learners import train_jrip, train_oner, train_part, train_zeror  # noqa: E402
from qostree.split_criteria import (  # noqa: E402
    gain_ratio, gini_reduction, information_gain, nominal_split, numeric_split_candidates,
)
from qostree.tree_learners import (  # noqa: E402
    TreeParams, induce, train_j48, train_random_forest, train_random_tree, train_reptree,
)

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")


_DATA: dict = {}


def synthetic():
    """The dataset exactly as ``qostree synth`` writes it, read back from disk."""
    if "d" not in _DATA:
        tmp = tempfile.mkdtemp(prefix="qostree-acc-")
        path = os.path.join(tmp, "qws364.csv")
        if cli_main(["synth", "--out", path, "--seed", "1"]) != 0:
            raise RuntimeError("synth failed")
        _DATA["path"] = path
        _DATA["d"] = load_dataset(path)
    return _DATA["d"]


# ---------------------------------------------------------------------------
# 1. ZeroR anchor


def check_zeror():
    d = synthetic()
    start = time.perf_counter()
    r = cross_validate(d, "zeror", k=10, seed=1)
    elapsed = time.perf_counter() - start
    ok = (len(d) == 364 and abs(r.accuracy - 32.967) <= 0.01 and r.correct == 120
          and abs(r.rae - 100.0) <= 1e-6 and abs(r.rrse - 100.0) <= 1e-6 and elapsed < 1.0)
    record(1, ok, f"ZeroR accuracy {r.accuracy:.3f}%, correct {r.correct:g}, RAE {r.rae:.6f}%, "
                  f"RRSE {r.rrse:.6f}%, {elapsed:.2f}s")
    return ok


# ---------------------------------------------------------------------------
# 2. perfect-learner anchor


def check_jrip():
    d = synthetic()
    start = time.perf_counter()
    r = cross_validate(d, "jrip", k=10, seed=1)
    elapsed = time.perf_counter() - start
    perfect = r.correct == len(d)
    errors = (r.mae, r.rmse, r.rae, r.rrse)
    zero_iff_perfect = all((e == 0.0) == perfect for e in errors)
    ok = r.correct >= 362 and zero_iff_perfect and elapsed < 10.0
    if perfect:
        ok = ok and all(e == 0.0 for e in errors)
    record(2, ok, f"JRip correct {r.correct:g}/364, MAE {r.mae:g} RMSE {r.rmse:g} RAE {r.rae:g} "
                  f"RRSE {r.rrse:g}, {elapsed:.2f}s")
    return ok


# ---------------------------------------------------------------------------
# 3. ordering anchor


def check_ordering():
    d = synthetic()
    c = compare_learners(d, list(DEFAULT_ROSTER), k=10, seed=1)
    acc = {r.learner: r.accuracy for r in c.reports if not r.failed}
    failed = [r.learner for r in c.reports if r.failed]
    stump = acc["decision-stump"]
    beaten = all(stump < acc[n] for n in ("j48", "reptree", "part", "jrip"))
    zeror_worst = all(acc["zeror"] < v for n, v in acc.items() if n != "zeror")
    ok = not failed and beaten and zeror_worst
    shown = ", ".join(f"{n} {acc[n]:.2f}" for n in ("zeror", "decision-stump", "j48", "reptree", "part", "jrip"))
    record(3, ok, f"{shown}; ZeroR worst of {len(acc)}")
    return ok


# ---------------------------------------------------------------------------
# 4. split-criteria oracle suite


def _h(counts):
    t = sum(counts)
    return -sum(c / t * math.log2(c / t) for c in counts if c > 0)


def _g(counts):
    t = sum(counts)
    return 1.0 - sum((c / t) ** 2 for c in counts)


def _brute(parent, table):
    total = sum(parent)
    sizes = [sum(r) for r in table]
    info = sum(s / total * _h(r) for s, r in zip(sizes, table) if s > 0)
    gain = _h(parent) - info
    split = -sum(s / total * math.log2(s / total) for s in sizes if s > 0)
    ratio = None if split <= 1e-10 else gain / split
    gini = None
    if len(table) == 2:
        gini = _g(parent) - sum(s / total * _g(r) for s, r in zip(sizes, table) if s > 0)
    return gain, ratio, gini


def _contingency(values, labels, m):
    """Raw contingency table {value: [count per class]} by plain counting."""
    table = {}
    for v, c in zip(values, labels):
        table.setdefault(v, [0.0] * m)[c] += 1.0
    return table


def _boundary_tables(values, labels, m):
    table = _contingency(values, labels, m)
    distinct = sorted(table)
    out = []
    for lo, hi in zip(distinct, distinct[1:]):
        a, b = table[lo], table[hi]
        pure_a = [k for k in range(m) if a[k] > 0]
        pure_b = [k for k in range(m) if b[k] > 0]
        if len(pure_a) == 1 and pure_a == pure_b:
            continue
        t = (lo + hi) / 2
        left = [0.0] * m
        right = [0.0] * m
        for v, c in zip(values, labels):
            (left if v <= t else right)[c] += 1.0
        out.append((t, [left, right]))
    return out


def check_split_oracle():
    rng = np.random.Generator(np.random.PCG64(2024))
    start = time.perf_counter()
    worst, compared, min_gain = 0.0, 0, math.inf
    for _ in range(1000):
        d = random_dataset(rng, n_max=20, p_max=4, m_max=4)
        m = d.num_classes
        labels = [int(c) for c in d.y]
        parent = [float(labels.count(k)) for k in range(m)]
        for j, attr in enumerate(d.features):
            values = [float(v) for v in d.X[:, j]]
            if attr.is_nominal:
                table = _contingency(values, labels, m)
                rows = [table.get(float(v), [0.0] * m) for v in range(len(attr.values))]
                lib = nominal_split(d, attr.name)
                pairs = [(rows, lib.children)]
                for v, row in enumerate(rows):
                    rest = [p - r for p, r in zip(parent, row)]
                    pairs.append(([row, rest], np.vstack([lib.children[v], lib.children.sum(0) - lib.children[v]])))
            else:
                expected = _boundary_tables(values, labels, m)
                got = numeric_split_candidates(d, attr.name)
                if [t for t, _ in expected] != [c.threshold for c in got]:
                    return record(4, False, f"threshold mismatch on attribute {attr.name}")
                pairs = [(tbl, c.children) for (_, tbl), c in zip(expected, got)]
            for table, children in pairs:
                if np.abs(np.asarray(table) - children).max() > 0:
                    return record(4, False, "contingency mismatch")
                b_gain, b_ratio, b_gini = _brute(parent, table)
                l_gain = information_gain(parent, children)
                l_ratio = gain_ratio(parent, children)
                diffs = [abs(l_gain - b_gain)]
                if (l_ratio is None) != (b_ratio is None):
                    return record(4, False, "gain ratio rejection mismatch")
                if l_ratio is not None:
                    diffs.append(abs(l_ratio - b_ratio))
                if b_gini is not None:
                    l_gini = gini_reduction(parent, children)
                    diffs.append(abs(l_gini - b_gini))
                    min_gain = min(min_gain, l_gini)
                worst = max(worst, *diffs)
                min_gain = min(min_gain, l_gain)
                compared += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and min_gain >= -1e-12 and elapsed < 30.0
    record(4, ok, f"{compared} candidates on 1000 datasets, max |diff| {worst:.2e}, "
                  f"min gain {min_gain:.2e}, {elapsed:.2f}s")
    return ok


# ---------------------------------------------------------------------------
# 5. learner property suite


def _contradiction_free(rng):
    d = random_dataset(rng, n_max=30, p_max=4, m_max=3)
    seen, rows = {}, []
    for i, x in enumerate(d.X):
        if seen.setdefault(tuple(x), d.y[i]) == d.y[i]:
            rows.append(i)
    return d.subset(rows)


def check_learner_properties():
    rng = np.random.Generator(np.random.PCG64(55))
    problems = Counter()
    for _ in range(100):
        d = _contradiction_free(rng)
        for crit in ("information_gain", "gain_ratio", "gini"):
            p = TreeParams(criterion=crit, min_instances_per_leaf=1, allow_zero_gain=True)
            if np.any(induce(d, p).predict(d) != d.y):
                problems["unpruned training accuracy"] += 1
        k_all = TreeParams(min_instances_per_leaf=1, allow_zero_gain=True, random_k=len(d.features))
        if np.any(train_random_tree(d, k_all).predict(d) != d.y):
            problems["random tree training accuracy"] += 1

        for pruned in (train_j48(d), train_reptree(d)):
            if pruned.node_count > pruned.metadata["nodes_before_pruning"]:
                problems["pruned larger than unpruned"] += 1
        if train_j48(d).node_count > train_j48(d, TreeParams(criterion="gain_ratio")).node_count:
            problems["pruned larger than unpruned"] += 1

        for fit in (train_zeror, train_oner, train_part, train_jrip):
            if not fit(d).rules[-1].is_default:
                problems["decision list without default"] += 1

    d = synthetic()
    for s in (1, 2, 3, 42, 1234):
        forest = train_random_forest(d, TreeParams(forest_size=1, bagging=False, seed=s))
        tree = train_random_tree(d, TreeParams(seed=s))
        if not np.array_equal(forest.predict_proba(d), tree.predict_proba(d)):
            problems["forest(T=1) differs from random tree"] += 1

    frng = np.random.Generator(np.random.PCG64(500))
    for _ in range(500):
        n = int(frng.integers(2, 120))
        m = int(frng.integers(2, 6))
        labels = [f"c{v}" for v in frng.integers(0, m, n)]
        k = int(frng.integers(2, min(n, 15) + 1))
        seed = int(frng.integers(0, 2**31))
        fd = make_dataset([list(range(n))], labels, class_values=[f"c{i}" for i in range(m)])
        f = stratified_folds(fd, k, seed)
        members = np.concatenate([f.test_indices(i) for i in range(k)])
        if sorted(members.tolist()) != list(range(n)):
            problems["fold partition"] += 1
        for c in range(m):
            counts = np.bincount(f.folds[fd.y == c], minlength=k)
            if counts.max() - counts.min() > 1:
                problems["stratification"] += 1
        if f != stratified_folds(fd, k, seed):
            problems["fold determinism"] += 1

    ok = not problems
    detail = "all properties hold (100 datasets x 9 learners, 5 forest seeds, 500 fold triples)" if ok \
        else "; ".join(f"{k}: {v}" for k, v in problems.items())
    record(5, ok, detail)
    return ok


# ---------------------------------------------------------------------------
# 6. metric oracle suite


def _naive(P, y, q, w):
    n, m = len(P), len(P[0])
    abs_sum = sq_sum = abs_q = sq_q = total = 0.0
    for i in range(n):
        total += w[i]
        for k in range(m):
            t = 1.0 if y[i] == k else 0.0
            abs_sum += w[i] * abs(P[i][k] - t)
            sq_sum += w[i] * (P[i][k] - t) ** 2
            abs_q += w[i] * abs(q[i][k] - t)
            sq_q += w[i] * (q[i][k] - t) ** 2
    return (abs_sum / (total * m), math.sqrt(sq_sum / (total * m)), 100 * abs_sum / abs_q,
            100 * math.sqrt(sq_sum / sq_q))


def check_metric_oracle():
    rng = np.random.Generator(np.random.PCG64(606))
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 60))
        m = int(rng.integers(2, 6))
        P = rng.dirichlet(np.ones(m), n)
        if rng.random() < 0.2:
            P = np.eye(m)[rng.integers(0, m, n)]
        y = rng.integers(0, m, n)
        q = rng.dirichlet(np.ones(m), n) if rng.random() < 0.5 else np.tile(rng.dirichlet(np.ones(m)), (n, 1))
        w = rng.uniform(0.1, 2.0, n) if rng.random() < 0.5 else np.ones(n)
        expect = _naive(P.tolist(), y.tolist(), q.tolist(), w.tolist())
        got = (mae(P, y, w), rmse(P, y, w), rae(P, y, q, w), rrse(P, y, q, w))
        worst = max(worst, *(abs(a - b) for a, b in zip(got, expect)))
    exact = True
    for m in (2, 3, 5):
        y = rng.integers(0, m, 40)
        y[:m] = np.arange(m)
        prior = np.bincount(y, minlength=m) / len(y)
        P = np.tile(prior, (len(y), 1))
        exact &= rae(P, y, prior) == 100.0 and rrse(P, y, prior) == 100.0
    ok = worst <= 1e-12 and exact
    record(6, ok, f"200 prediction sets, max |diff| {worst:.2e}; prior RAE/RRSE exactly 100% "
                  f"for m in (2, 3, 5): {exact}")
    return ok


# ---------------------------------------------------------------------------
# 7. cube equivalence


def check_cube():
    d = synthetic()
    store = tempfile.mkdtemp(prefix="qostree-cube-")
    start = time.perf_counter()
    cube = build_cube(d, "all", "jrip", seed=1, store=store)
    elapsed = time.perf_counter() - start
    params = [a.name for a in d.features]
    direct = LearnerSpec("jrip").train(d, 1)
    cell = cube.cell(params, "jrip").model
    labels_equal = np.array_equal(cell.predict(d), direct.predict(d))
    dist_close = np.abs(cell.predict_proba(d) - direct.predict_proba(d)).max() <= 1e-12
    back = load_cube(store)
    cands = d.subset(range(0, len(d), 5))
    round_trip = all(
        query(cube, s, "jrip", cands).to_dict() == query(back, s, "jrip", cands).to_dict()
        for s in (params, ["ResponseTime", "Availability"], ["ResponseTime", "Latency", "Successability"])
    )
    all_ok = len(cube) == 511 and all(c.ok for c in cube.cells.values())
    ok = all_ok and labels_equal and dist_close and round_trip and elapsed < 60.0
    record(7, ok, f"{len(cube)} cells built in {elapsed:.1f}s; full cell == direct: {labels_equal and dist_close}; "
                  f"round trip identical: {round_trip}")
    return ok


# ---------------------------------------------------------------------------
# 8. determinism


def _tree_bytes(directory):
    out = {}
    for root, _, files in os.walk(directory):
        for f in files:
            p = os.path.join(root, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, directory)] = fh.read()
    return out


def check_determinism():
    synthetic()
    data = _DATA["path"]
    tmp = tempfile.mkdtemp(prefix="qostree-det-")
    reports = []
    for i in range(2):
        out = os.path.join(tmp, f"eval{i}.json")
        code = cli_main(["evaluate", "--data", data, "--folds", "10", "--seed", "1", "--out", out, "--normalize"])
        with open(out, "rb") as fh:
            reports.append((code, fh.read()))
    eval_same = reports[0] == reports[1] and reports[0][0] == 0
    cubes = []
    for i in range(2):
        out = os.path.join(tmp, f"cube{i}")
        code = cli_main(["cube", "--data", data, "--seed", "1", "--out", out, "--normalize"])
        cubes.append((code, _tree_bytes(out)))
    cube_same = cubes[0] == cubes[1] and cubes[0][0] == 0 and len(cubes[0][1]) == 512
    ok = eval_same and cube_same
    record(8, ok, f"evaluate reports identical: {eval_same}; cube stores identical "
                  f"({len(cubes[0][1])} files): {cube_same}")
    return ok


CHECKS = {1: check_zeror, 2: check_jrip, 3: check_ordering, 4: check_split_oracle,
          5: check_learner_properties, 6: check_metric_oracle, 7: check_cube, 8: check_determinism}


@pytest.mark.parametrize("criterion", sorted(CHECKS))
def test_criterion(criterion):
    CHECKS[criterion]()
    ok, detail = RESULTS[criterion]
    assert ok, detail


if __name__ == "__main__":
    for n in sorted(CHECKS):
        CHECKS[n]()
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
