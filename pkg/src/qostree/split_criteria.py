"""Impurity measures and split-quality scores.

All counts are real-valued weights so fractional instances pass through the
formulas unchanged. Logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TOL = 1e-10


class ClassDistribution:
    """Non-negative weight per class."""

    __slots__ = ("counts",)

    def __init__(self, counts):
        counts = np.array(counts, dtype=float).reshape(-1)
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValueError("class counts must be finite and non-negative")
        self.counts = counts

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def probabilities(self) -> np.ndarray:
        t = self.total
        if t <= 0:
            raise ValueError("empty distribution")
        return self.counts / t

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.counts))

    def __len__(self) -> int:
        return len(self.counts)

    def __array__(self, dtype=None, copy=None):
        return self.counts if dtype is None else self.counts.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClassDistribution):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __repr__(self) -> str:
        return f"ClassDistribution({self.counts.tolist()})"


@dataclass
class SplitCandidate:
    """A test on one attribute and the class weights of its partitions.

    ``children`` holds one row of class weights per partition, with the
    weight of instances missing the attribute already spread over the
    partitions in proportion to their known weight. ``kind`` is "nominal"
    (one partition per label), "numeric" (``<= threshold`` / ``> threshold``)
    or "equals" (``== value`` / ``!= value``).
    """

    attribute: object
    kind: str
    children: np.ndarray
    threshold: float | None = None
    value: int | None = None
    missing: np.ndarray | None = field(default=None, repr=False)

    @property
    def child_weights(self) -> np.ndarray:
        return self.children.sum(axis=1)

    @property
    def arity(self) -> int:
        return len(self.children)


def _counts(dist) -> np.ndarray:
    return np.asarray(dist, dtype=float)


def _children(split) -> np.ndarray:
    if isinstance(split, SplitCandidate):
        return np.asarray(split.children, dtype=float)
    c = np.asarray(split, dtype=float)
    if c.ndim != 2:
        raise ValueError("children must be a 2-d array of class weights")
    return c


def entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits along the last axis; rows with zero total give 0."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / total
        pos = p > 0
        terms = np.where(pos, p * np.log2(np.where(pos, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def gini_rows(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / total[..., None]
        g = 1.0 - np.sum(p * p, axis=-1)
    return np.where(total > 0, g, 0.0)


def entropy(dist) -> float:
    c = _counts(dist)
    if c.sum() <= 0:
        raise ValueError("entropy of an empty distribution")
    return float(entropy_rows(c))


def gini(dist) -> float:
    c = _counts(dist)
    if c.sum() <= 0:
        raise ValueError("gini of an empty distribution")
    return float(gini_rows(c))


def info_after_split(split) -> float:
    """Weighted average entropy of the partitions."""
    ch = _children(split)
    w = ch.sum(axis=1)
    total = w.sum()
    if total <= 0:
        raise ValueError("all partitions are empty")
    return float(np.sum(w / total * entropy_rows(ch)))


def _check_partition(parent: np.ndarray, ch: np.ndarray) -> None:
    if ch.shape[1] != parent.shape[0]:
        raise ValueError("class count mismatch between parent and partitions")
    if not np.allclose(ch.sum(axis=0), parent, rtol=1e-9, atol=1e-9):
        raise ValueError("partitions do not add up to the parent distribution")


def information_gain(parent, split) -> float:
    p = _counts(parent)
    ch = _children(split)
    _check_partition(p, ch)
    return entropy(p) - info_after_split(ch)


def split_info(split) -> float:
    ch = _children(split)
    w = ch.sum(axis=1)
    if w.sum() <= 0:
        raise ValueError("split info of an empty partition")
    return float(entropy_rows(w))


def gain_ratio(parent, split) -> float | None:
    """Gain divided by split info; None when all weight falls in one partition."""
    si = split_info(split)
    if si <= TOL:
        return None
    return information_gain(parent, split) / si


def gini_reduction(parent, split) -> float:
    p = _counts(parent)
    ch = _children(split)
    if len(ch) != 2:
        raise ValueError(f"gini reduction is defined for binary splits, got {len(ch)} partitions")
    _check_partition(p, ch)
    w = ch.sum(axis=1)
    return gini(p) - float(np.sum(w / w.sum() * gini_rows(ch)))


# ---------------------------------------------------------------------------
# candidate generation


def spread_missing(known_children: np.ndarray, missing: np.ndarray) -> np.ndarray:
    """Distribute missing-value class weight over partitions by known weight.

    ``known_children`` may be (v, m) or a stack (n, v, m).
    """
    kw = known_children.sum(axis=-1, keepdims=True)
    total = kw.sum(axis=-2, keepdims=True)
    if not np.any(missing):
        return known_children
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(total > 0, kw / total, 0.0)
    return known_children + frac * missing


def boundary_thresholds(values: np.ndarray, y: np.ndarray, w: np.ndarray, m: int):
    """Class-boundary cut points of one numeric column.

    Only known (non-NaN) values are passed in. Returns ``(thresholds, left)``
    where ``left[i]`` are the class weights with value <= thresholds[i].
    A cut between two adjacent distinct values is kept unless both value
    groups hold a single, identical class.
    """
    if len(values) == 0:
        return np.empty(0), np.empty((0, m))
    order = np.argsort(values, kind="stable")
    v = values[order]
    onehot = np.zeros((len(v), m))
    onehot[np.arange(len(v)), y[order]] = w[order]
    cum = np.cumsum(onehot, axis=0)
    # last index of each distinct-value group
    ends = np.flatnonzero(np.r_[v[1:] != v[:-1], True])
    if len(ends) < 2:
        return np.empty(0), np.empty((0, m))
    group = np.diff(np.vstack([np.zeros(m), cum[ends]]), axis=0)
    present = group > 0
    n_present = present.sum(axis=1)
    pure_cls = np.where(n_present == 1, np.argmax(present, axis=1), -1)
    keep = ~((pure_cls[:-1] >= 0) & (pure_cls[:-1] == pure_cls[1:]))
    cut = ends[:-1][keep]
    thresholds = (v[cut] + v[cut + 1]) / 2.0
    return thresholds, cum[cut]


def _column(d, a) -> int:
    """Resolve an attribute given by name, Attribute or index into ``d.attributes``."""
    if isinstance(a, str):
        names = [x.name for x in d.attributes]
        if a not in names:
            raise KeyError(a)
        return names.index(a)
    if hasattr(a, "name") and hasattr(a, "kind"):
        return d.attributes.index(a)
    return int(a)


def numeric_split_candidates(d, a) -> list[SplitCandidate]:
    """Binary ``<= t`` / ``> t`` candidates at class-boundary midpoints."""
    j = _column(d, a)
    attr = d.attributes[j]
    if not attr.is_numeric:
        raise ValueError(f"attribute {attr.name!r} is not numeric")
    col = d.data[:, j]
    known = ~np.isnan(col)
    m = d.num_classes
    missing = np.bincount(d.y[~known], weights=d.weights[~known], minlength=m)
    total_known = np.bincount(d.y[known], weights=d.weights[known], minlength=m)
    thresholds, left = boundary_thresholds(col[known], d.y[known], d.weights[known], m)
    out = []
    for t, lc in zip(thresholds, left):
        kc = np.vstack([lc, total_known - lc])
        out.append(SplitCandidate(attr, "numeric", spread_missing(kc, missing), threshold=float(t),
                                  missing=missing))
    return out


def nominal_split(d, a) -> SplitCandidate:
    """Multiway split with one partition per nominal label."""
    j = _column(d, a)
    attr = d.attributes[j]
    if not attr.is_nominal:
        raise ValueError(f"attribute {attr.name!r} is not nominal")
    col = d.data[:, j]
    known = ~np.isnan(col)
    m = d.num_classes
    kc = np.zeros((len(attr.values), m))
    np.add.at(kc, (col[known].astype(np.intp), d.y[known]), d.weights[known])
    missing = np.bincount(d.y[~known], weights=d.weights[~known], minlength=m)
    return SplitCandidate(attr, "nominal", spread_missing(kc, missing), missing=missing)


def best_by(scores: Sequence[float]) -> int | None:
    """Index of the highest score (first on ties, within TOL); None if empty."""
    best = None
    for i, s in enumerate(scores):
        if s is None:
            continue
        if best is None or s > scores[best] + TOL:
            best = i
    return best
