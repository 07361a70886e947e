"""Learner roster with parameter schemas behind one ``train`` entry point."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import rule_learners as rules
from . import tree_learners as trees
from .dataset import Dataset
from .models import Model


class LearnerError(ValueError):
    pass


def _tree(fn, **fixed):
    def train(d, **kw):
        return fn(d, trees.TreeParams(**{**fixed, **kw}))
    return train


_TREE_COMMON = {"min_instances_per_leaf": float}

# name -> (display name, trainer(d, **params), parameter types, takes a seed)
REGISTRY: dict[str, tuple[str, Callable[..., Model], dict, bool]] = {
    "decision-stump": ("DecisionStump", lambda d: trees.train_decision_stump(d), {}, False),
    "j48": ("J48", _tree(trees.train_j48, criterion="gain_ratio", pruning="confidence"),
            {**_TREE_COMMON, "confidence": float, "pruning": str}, False),
    "random-forest": ("Random Forest", _tree(trees.train_random_forest),
                      {**_TREE_COMMON, "forest_size": int, "random_k": int, "bagging": bool, "seed": int},
                      True),
    "random-tree": ("RandomTree", _tree(trees.train_random_tree),
                    {**_TREE_COMMON, "random_k": int, "seed": int}, True),
    "reptree": ("REPTree", _tree(trees.train_reptree, pruning="reduced_error"),
                {**_TREE_COMMON, "pruning": str, "prune_folds": int, "seed": int}, True),
    "decision-table": ("Decision Table", rules.train_decision_table, {"max_stale": int}, False),
    "jrip": ("JRip", rules.train_jrip,
             {"folds": int, "min_weight": float, "optimizations": int, "seed": int}, True),
    "oner": ("OneR", rules.train_oner, {"min_bucket": float}, False),
    "part": ("PART", _tree(rules.train_part, criterion="gain_ratio", pruning="confidence"),
             {**_TREE_COMMON, "confidence": float}, False),
    "zeror": ("ZeroR", rules.train_zeror, {}, False),
}

DEFAULT_ROSTER = tuple(REGISTRY)

UNSUPPORTED = {
    "lmt": "logistic model trees need a logistic-regression stack and are not provided",
}


def _coerce(kind, raw):
    if not isinstance(raw, str):
        return kind(raw)
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    return kind(raw)


@dataclass(frozen=True)
class LearnerSpec:
    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name in UNSUPPORTED:
            raise LearnerError(f"learner {self.name!r}: {UNSUPPORTED[self.name]}")
        if self.name not in REGISTRY:
            raise LearnerError(f"unknown learner {self.name!r}; choose from {', '.join(REGISTRY)}")
        schema = REGISTRY[self.name][2]
        checked = []
        for key, raw in self.params:
            if key not in schema:
                raise LearnerError(f"learner {self.name!r} has no parameter {key!r}")
            try:
                checked.append((key, _coerce(schema[key], raw)))
            except (TypeError, ValueError):
                raise LearnerError(f"parameter {key!r} of {self.name!r} expects "
                                   f"{schema[key].__name__}, got {raw!r}") from None
        object.__setattr__(self, "params", tuple(sorted(checked)))

    @classmethod
    def parse(cls, name: str, overrides=()) -> "LearnerSpec":
        """Build from ``name`` and ``key=value`` strings."""
        pairs = []
        for item in overrides:
            if "=" not in item:
                raise LearnerError(f"parameter override {item!r} is not key=value")
            k, v = item.split("=", 1)
            pairs.append((k.strip(), v.strip()))
        return cls(name.strip().lower(), tuple(pairs))

    @property
    def display_name(self) -> str:
        return REGISTRY[self.name][0]

    @property
    def key(self) -> str:
        if not self.params:
            return self.name
        return self.name + "[" + ",".join(f"{k}={v}" for k, v in self.params) + "]"

    def train(self, d: Dataset, seed: int | None = None) -> Model:
        _, fn, _, seeded = REGISTRY[self.name]
        kw = dict(self.params)
        if seeded and seed is not None and "seed" not in kw:
            kw["seed"] = seed
        return fn(d, **kw)


def as_spec(learner) -> LearnerSpec:
    if isinstance(learner, LearnerSpec):
        return learner
    if isinstance(learner, str):
        return LearnerSpec.parse(learner)
    raise LearnerError(f"not a learner: {learner!r}")
