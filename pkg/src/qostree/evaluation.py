"""Stratified k-fold cross-validation and the error metrics reported per learner.

Error metrics compare predicted class distributions with one-hot truth:

    MAE  = sum_i sum_k |p_ik - y_ik| / (W m)
    RMSE = sqrt(sum_i sum_k (p_ik - y_ik)^2 / (W m))
    RAE  = 100 sum |p - y| / sum |q - y|
    RRSE = 100 sqrt(sum (p - y)^2 / sum (q - y)^2)

with instance weights folded into every sum, W the total weight, m the class
count and q the class prior of the training folds that produced each test
prediction (frozen per fold).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset, FoldAssignment, stratified_folds
from .learners import LearnerSpec, as_spec

REPORT_FORMAT = "qostree-evaluation"
REPORT_VERSION = 1


class EvaluationError(RuntimeError):
    pass


def _check(probabilities, actual, weights=None):
    P = np.asarray(probabilities, dtype=float)
    y = np.asarray(actual, dtype=np.intp)
    if P.ndim != 2 or len(P) == 0:
        raise ValueError("need a non-empty (n, m) array of predicted distributions")
    if y.shape != (len(P),):
        raise ValueError("one true label per prediction required")
    if np.any(y < 0) or np.any(y >= P.shape[1]):
        raise ValueError("class count mismatch: label outside the predicted distribution")
    w = np.ones(len(P)) if weights is None else np.asarray(weights, dtype=float)
    return P, y, w


def _onehot(y, m):
    Y = np.zeros((len(y), m))
    Y[np.arange(len(y)), y] = 1.0
    return Y


def _priors(priors, n, m):
    Q = np.asarray(priors, dtype=float)
    if Q.ndim == 1:
        Q = np.broadcast_to(Q, (n, len(Q)))
    if Q.shape != (n, m):
        raise ValueError("class count mismatch between priors and predictions")
    return Q


def _abs_sum(P, Y, w) -> float:
    return math.fsum((w[:, None] * np.abs(P - Y)).ravel())


def _sq_sum(P, Y, w) -> float:
    return math.fsum((w[:, None] * (P - Y) ** 2).ravel())


def mae(probabilities, actual, weights=None) -> float:
    P, y, w = _check(probabilities, actual, weights)
    return _abs_sum(P, _onehot(y, P.shape[1]), w) / (math.fsum(w) * P.shape[1])


def rmse(probabilities, actual, weights=None) -> float:
    P, y, w = _check(probabilities, actual, weights)
    return math.sqrt(_sq_sum(P, _onehot(y, P.shape[1]), w) / (math.fsum(w) * P.shape[1]))


def rae(probabilities, actual, priors, weights=None) -> float:
    """Relative absolute error in percent against the prior predictor."""
    P, y, w = _check(probabilities, actual, weights)
    Y = _onehot(y, P.shape[1])
    den = _abs_sum(_priors(priors, len(P), P.shape[1]), Y, w)
    if den <= 0:
        raise ValueError("prior is perfect: relative error undefined")
    return 100.0 * _abs_sum(P, Y, w) / den


def rrse(probabilities, actual, priors, weights=None) -> float:
    """Root relative squared error in percent against the prior predictor."""
    P, y, w = _check(probabilities, actual, weights)
    Y = _onehot(y, P.shape[1])
    den = _sq_sum(_priors(priors, len(P), P.shape[1]), Y, w)
    if den <= 0:
        raise ValueError("prior is perfect: relative error undefined")
    return 100.0 * math.sqrt(_sq_sum(P, Y, w) / den)


@dataclass
class EvaluationReport:
    learner: str
    display_name: str
    params: dict
    k: int
    seed: int
    total: float = 0.0
    correct: float = 0.0
    incorrect: float = 0.0
    accuracy: float = 0.0
    mae: float | None = None
    rmse: float | None = None
    rae: float | None = None
    rrse: float | None = None
    build_time: float = 0.0
    folds: list = field(default_factory=list)
    error: str | None = None
    probabilities: np.ndarray | None = field(default=None, repr=False)
    actual: np.ndarray | None = field(default=None, repr=False)
    priors: np.ndarray | None = field(default=None, repr=False)
    weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self, normalize: bool = False) -> dict:
        d = {
            "learner": self.learner,
            "name": self.display_name,
            "params": self.params,
            "k": self.k,
            "seed": self.seed,
            "error": self.error,
        }
        if self.failed:
            return d
        d.update(
            total=self.total, correct=self.correct, incorrect=self.incorrect,
            accuracy=self.accuracy, mae=self.mae, rmse=self.rmse, rae=self.rae, rrse=self.rrse,
            build_time=None if normalize else round(self.build_time, 3),
            folds=[{**f, "build_time": None if normalize else round(f["build_time"], 3)}
                   for f in self.folds],
        )
        return d


def _learner_parts(learner):
    if callable(learner) and not isinstance(learner, (str, LearnerSpec)):
        name = getattr(learner, "__name__", "custom")
        return name, name, {}, lambda d, seed: learner(d)
    spec = as_spec(learner)
    return spec.key, spec.display_name, dict(spec.params), lambda d, seed: spec.train(d, seed)


def cross_validate(d: Dataset, learner, k: int = 10, seed: int = 1,
                   folds: FoldAssignment | None = None) -> EvaluationReport:
    """Train on k-1 folds, predict the held-out fold, pool the predictions.

    ``learner`` is a LearnerSpec, a learner name, or any callable taking a
    training Dataset and returning a fitted model.
    """
    key, display, params, fit = _learner_parts(learner)
    folds = folds or stratified_folds(d, k, seed)
    n, m = len(d), d.num_classes
    P = np.zeros((n, m))
    Q = np.zeros((n, m))
    report = EvaluationReport(key, display, params, folds.k, folds.seed)
    for f in range(folds.k):
        train_idx, test_idx = folds.train_indices(f), folds.test_indices(f)
        train = d.subset(train_idx)
        start = time.perf_counter()
        try:
            model = fit(train, seed)
        except Exception as exc:
            raise EvaluationError(f"fold {f}: {exc}") from exc
        elapsed = time.perf_counter() - start
        prior = np.bincount(train.y, weights=train.weights, minlength=m)
        Q[test_idx] = prior / prior.sum()
        P[test_idx] = model.predict_proba(d.subset(test_idx))
        hits = np.argmax(P[test_idx], axis=1) == d.y[test_idx]
        report.folds.append({"fold": f, "test": int(len(test_idx)),
                             "correct": float(d.weights[test_idx][hits].sum()),
                             "build_time": elapsed})
        report.build_time += elapsed
    w = np.asarray(d.weights)
    hits = np.argmax(P, axis=1) == d.y
    report.total = math.fsum(w)
    report.correct = math.fsum(w[hits])
    report.incorrect = math.fsum(w[~hits])
    report.accuracy = 100.0 * report.correct / report.total
    report.mae = mae(P, d.y, w)
    report.rmse = rmse(P, d.y, w)
    try:
        report.rae = rae(P, d.y, Q, w)
        report.rrse = rrse(P, d.y, Q, w)
    except ValueError:
        report.rae = report.rrse = None
    report.probabilities, report.actual, report.priors, report.weights = P, np.asarray(d.y), Q, w
    return report


# ---------------------------------------------------------------------------
# comparison tables


@dataclass
class Comparison:
    dataset: str
    instances: int
    k: int
    seed: int
    reports: list

    def to_dict(self, normalize: bool = False) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "dataset": self.dataset,
            "instances": self.instances,
            "k": self.k,
            "seed": self.seed,
            "results": [r.to_dict(normalize) for r in self.reports],
        }

    def to_json(self, normalize: bool = False) -> str:
        return json.dumps(self.to_dict(normalize), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        return render_tables(self.reports)


def compare_learners(d: Dataset, learners: Sequence, k: int = 10, seed: int = 1) -> Comparison:
    """Paired evaluation: every learner sees the same fold assignment."""
    if not learners:
        raise ValueError("no learners to compare")
    folds = stratified_folds(d, k, seed)
    reports = []
    for learner in learners:
        try:
            reports.append(cross_validate(d, learner, k, seed, folds=folds))
        except EvaluationError as exc:
            key, display, params, _ = _learner_parts(learner)
            reports.append(EvaluationReport(key, display, params, k, seed, error=str(exc)))
    return Comparison(d.name, len(d), k, seed, reports)


def _table(title: str, header: Sequence[str], rows: list) -> str:
    cells = [list(header)] + rows
    widths = [max(len(str(r[i])) for r in cells) for i in range(len(header))]
    lines = [title]
    for j, r in enumerate(cells):
        lines.append("  ".join(str(c).ljust(widths[i]) if i == 0 else str(c).rjust(widths[i])
                               for i, c in enumerate(r)).rstrip())
        if j == 0:
            lines.append("  ".join("-" * wd for wd in widths))
    return "\n".join(lines)


def _num(x, fmt):
    return "n/a" if x is None else format(x, fmt)


def _count(x: float) -> str:
    return str(int(round(x))) if abs(x - round(x)) < 1e-9 else f"{x:.2f}"


def render_tables(reports: Sequence[EvaluationReport]) -> str:
    ok = [r for r in reports if not r.failed]
    t2 = _table("Accuracy and build time", ["Tree", "Accuracy(%)", "Time/Sec"],
                [[r.display_name, f"{r.accuracy:.3f}", f"{r.build_time:.2f}"] for r in ok])
    t3 = _table("Instance counts",
                ["Tree", "Correctly Classified Instances", "Incorrectly Classified Instances"],
                [[r.display_name, _count(r.correct), _count(r.incorrect)] for r in ok])
    t4 = _table("Error measures",
                ["Tree", "Mean absolute error", "Root mean squared error", "Relative absolute error",
                 "Root relative squared error"],
                [[r.display_name, _num(r.mae, ".4f"), _num(r.rmse, ".4f"), _num(r.rae, ".4f"),
                  _num(r.rrse, ".4f")] for r in ok])
    parts = [t2, t3, t4]
    failed = [r for r in reports if r.failed]
    if failed:
        parts.append("Failed learners\n" + "\n".join(f"{r.display_name}: {r.error}" for r in failed))
    return "\n\n".join(parts) + "\n"

